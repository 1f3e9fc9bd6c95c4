import numpy as np
import pytest
import torch

from ministone import actions as A
from ministone import engine, obsact, policy
from ministone.cards import default_pool

from conftest import add_minion, make_bt_state


@pytest.fixture(scope="module")
def pool():
    return default_pool()


@pytest.fixture(scope="module")
def params(pool):
    return policy.init_params(pool.checksum, seed=7)


def cb_obs(pool):
    s = engine.new_match(pool, "mage", "hunter", 3)
    return obsact.encode(s, pool, 0)


def bt_obs(pool):
    s = make_bt_state(pool)
    s.players[0].mana_current = s.players[0].mana_cap = 5
    s.players[0].hand = [34, 23, 2]
    add_minion(s.players[0], 3, 3, 2)
    add_minion(s.players[1], 13, 1, 4, taunt=True)
    return obsact.encode(s, pool, 0)


class TestInit:
    def test_deterministic_per_seed(self, pool):
        a = policy.init_params(pool.checksum, 5)
        b = policy.init_params(pool.checksum, 5)
        assert np.array_equal(policy.flat_params(a), policy.flat_params(b))

    def test_seeds_differ(self, pool):
        a = policy.init_params(pool.checksum, 5)
        b = policy.init_params(pool.checksum, 6)
        fa, fb = policy.flat_params(a), policy.flat_params(b)
        assert fa.shape == fb.shape and not np.array_equal(fa, fb)

    def test_near_uniform_at_init(self, pool, params):
        for obs in (cb_obs(pool), bt_obs(pool)):
            out = policy.forward(params, obs)
            probs = out.probs[0].numpy()
            legal = probs[obs.action_mask.astype(bool)]
            assert legal.max() / legal.min() < 2.0


class TestForward:
    def test_masked_probs_exactly_zero(self, pool, params):
        obs = bt_obs(pool)
        out = policy.forward(params, obs)
        probs = out.probs[0].numpy()
        assert np.all(probs[~obs.action_mask.astype(bool)] == 0.0)
        assert abs(probs.sum() - 1.0) < 1e-6

    def test_single_legal_action_gets_prob_one(self, pool, params):
        obs = bt_obs(pool)
        only = int(np.flatnonzero(obs.action_mask)[0])
        obs.action_mask[:] = 0.0
        obs.action_mask[only] = 1.0
        out = policy.forward(params, obs)
        assert out.probs[0, only].item() == pytest.approx(1.0, abs=1e-7)

    def test_float64_normalization(self, pool):
        p64 = policy.init_params(pool.checksum, 1, policy.PolicyConfig(dtype="float64"))
        for obs in (cb_obs(pool), bt_obs(pool)):
            out = policy.forward(p64, obs)
            assert abs(out.probs.sum().item() - 1.0) < 1e-12

    def test_branch_isolation(self, pool, params):
        cb = cb_obs(pool)
        bt = bt_obs(pool)
        base_cb = policy.forward(params, cb).probs.numpy()
        base_bt = policy.forward(params, bt).probs.numpy()
        perturbed = params.clone()
        with torch.no_grad():
            for p in perturbed.net.bt.parameters():
                p.add_(torch.randn_like(p))
        assert np.array_equal(policy.forward(perturbed, cb).probs.numpy(), base_cb)
        assert not np.array_equal(policy.forward(perturbed, bt).probs.numpy(), base_bt)
        perturbed2 = params.clone()
        with torch.no_grad():
            for p in perturbed2.net.cb.parameters():
                p.add_(torch.randn_like(p))
        assert np.array_equal(policy.forward(perturbed2, bt).probs.numpy(), base_bt)
        assert not np.array_equal(policy.forward(perturbed2, cb).probs.numpy(), base_cb)

    def test_non_finite_input_rejected(self, pool, params):
        obs = bt_obs(pool)
        obs.floats[3] = np.nan
        with pytest.raises(ValueError):
            policy.forward(params, obs)

    def test_recurrent_config_runs(self, pool):
        cfg = policy.PolicyConfig(hidden=64, recurrent=True, recurrent_size=32)
        p = policy.init_params(pool.checksum, 2, cfg)
        obs = bt_obs(pool)
        out1 = policy.forward(p, obs)
        assert out1.recurrent_out is not None
        out2 = policy.forward(p, obs, recurrent_in=out1.recurrent_out)
        assert out2.probs.shape == out1.probs.shape


class TestRandomCbOverride:
    def test_uniform_over_legal(self, pool, params):
        obs = cb_obs(pool)
        out = policy.random_cb_override(policy.forward(params, obs), active=True)
        probs = out.probs[0].numpy()
        legal = obs.action_mask.astype(bool)
        assert np.allclose(probs[legal], 1.0 / legal.sum())
        assert np.all(probs[~legal] == 0.0)

    def test_inactive_identity(self, pool, params):
        out = policy.forward(params, cb_obs(pool))
        assert policy.random_cb_override(out, active=False) is out

    def test_single_legal_pick(self, pool, params):
        obs = cb_obs(pool)
        keep = int(np.flatnonzero(obs.action_mask)[0])
        obs.action_mask[:] = 0.0
        obs.action_mask[keep] = 1.0
        out = policy.random_cb_override(policy.forward(params, obs), active=True)
        assert out.probs[0, keep].item() == 1.0

    def test_bt_output_rejected(self, pool, params):
        out = policy.forward(params, bt_obs(pool))
        with pytest.raises(ValueError):
            policy.random_cb_override(out, active=True)


class TestBackward:
    def test_directional_finite_difference(self, pool):
        cfg = policy.PolicyConfig(hidden=32, emb_dim=8, dtype="float64")
        p = policy.init_params(pool.checksum, 3, cfg)
        obs = bt_obs(pool)
        floats = obs.floats[None, :].astype(np.float64)
        ids = obs.ids[None, :]
        action = int(np.flatnonzero(obs.action_mask)[0])

        def loss_value(pp):
            out = policy.forward_batch(pp, floats, ids, grad=True)
            return -torch.log(out.probs[0, action]) + out.value[0] ** 2

        grad = policy.backward(p, loss_value(p))
        rng = np.random.default_rng(0)
        theta = policy.flat_params(p)
        for _ in range(5):
            d = rng.standard_normal(theta.shape)
            d /= np.linalg.norm(d)
            eps = 1e-6
            q = p.clone()
            policy.set_flat_params(q, theta + eps * d)
            lp = loss_value(q).item()
            policy.set_flat_params(q, theta - eps * d)
            lm = loss_value(q).item()
            fd = (lp - lm) / (2 * eps)
            an = float(grad @ d)
            assert abs(an - fd) / max(abs(fd), 1e-8) < 1e-4

    def test_non_finite_loss_rejected(self, pool, params):
        with pytest.raises(ValueError):
            policy.backward(params, torch.tensor(float("nan")))


class TestCheckpoint:
    def test_round_trip_bit_exact(self, pool, params, tmp_path):
        obs = bt_obs(pool)
        before = policy.forward(params, obs)
        path = tmp_path / "p.ckpt"
        policy.save_checkpoint(params, path)
        loaded = policy.load_checkpoint(path, pool.checksum)
        after = policy.forward(loaded, obs)
        assert np.array_equal(before.probs.numpy(), after.probs.numpy())
        assert np.array_equal(before.value.numpy(), after.value.numpy())
        assert np.array_equal(policy.flat_params(params), policy.flat_params(loaded))

    def test_wrong_pool_checksum(self, params, tmp_path):
        path = tmp_path / "p.ckpt"
        policy.save_checkpoint(params, path)
        with pytest.raises(ValueError):
            policy.load_checkpoint(path, "f" * 64)

    def test_corrupt_file_rejected(self, params, tmp_path):
        path = tmp_path / "p.ckpt"
        policy.save_checkpoint(params, path)
        raw = bytearray(path.read_bytes())
        raw[len(raw) // 2] ^= 0xFF
        path.write_bytes(bytes(raw))
        with pytest.raises(ValueError):
            policy.load_checkpoint(path)

    def test_metadata_preserved(self, pool, tmp_path):
        p = policy.init_params(pool.checksum, 9, hero_tag="mage")
        p.step = 1234
        path = tmp_path / "p.ckpt"
        policy.save_checkpoint(p, path)
        loaded = policy.load_checkpoint(path)
        assert loaded.step == 1234 and loaded.hero_tag == "mage"
