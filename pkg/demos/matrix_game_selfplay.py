"""The meta-controller on rock-paper-scissors.

Runs the self-play controller with an exact best-response learner on
the 3x3 rock-paper-scissors payoff matrix and prints how exploitable
the averaged historical pool is after each learning period. The mixture
converges toward the uniform equilibrium.
"""

from ministone import osfp


def main():
    res = osfp.run_matrix_game(n_lps=20, seed=0)
    print("LP  exploitability of pool average")
    for i, e in enumerate(res["trace"]):
        bar = "#" * int(e * 40)
        print(f"{i:2d}  {e:6.3f} {bar}")
    print(f"\nfinal mixture (rock, paper, scissors): "
          f"{[round(x, 3) for x in res['mixture']]}")


if __name__ == "__main__":
    main()
