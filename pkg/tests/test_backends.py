import numpy as np
import pytest

from mjq.backends import get_backend

from conftest import small_mix


@pytest.fixture(scope="module")
def backends():
    return get_backend("numba"), get_backend("numpy")


def test_env_var_selection(monkeypatch):
    monkeypatch.setenv("MJQ_BACKEND", "numpy")
    assert get_backend().name == "numpy"
    monkeypatch.setenv("MJQ_BACKEND", "numba")
    assert get_backend().name == "numba"
    monkeypatch.delenv("MJQ_BACKEND")
    assert get_backend().name == "numba"  # auto prefers numba
    monkeypatch.setenv("MJQ_BACKEND", "cuda")
    with pytest.raises(ValueError):
        get_backend()


def test_uniform_bit_identity(backends):
    kb, kn = backends
    rng = np.random.default_rng(0)
    for _ in range(500):
        seed, rep, job, sub, ctr = (int(x) for x in rng.integers(0, 2 ** 40,
                                                                 size=5))
        u1 = kb.uniform(seed, rep, job, sub % 4, ctr)
        u2 = kn.uniform(seed, rep, job, sub % 4, ctr)
        assert u1 == u2
        assert 0.0 <= u1 < 1.0


def test_gen_marks_bit_identity(backends):
    kb, kn = backends
    pack = small_mix().pack
    mb = kb.gen_marks(3, 7, 0, 5000, *pack)
    mn = kn.gen_marks(3, 7, 0, 5000, *pack)
    for a, b in zip(mb, mn):
        assert np.array_equal(a, b)


def test_window_and_forward_bit_identity(backends):
    kb, kn = backends
    sc = small_mix()
    w0 = np.zeros(sc.servers)
    assert np.array_equal(kb.window(1, 2, 3000, 0, w0, *sc.pack),
                          kn.window(1, 2, 3000, 0, w0, *sc.pack))
    fb = kb.forward(1, 2, 2000, w0, *sc.pack, False)
    fn = kn.forward(1, 2, 2000, w0, *sc.pack, False)
    for a, b in zip(fb, fn):
        assert np.array_equal(a, b)


def test_pile_run_bit_identity(backends):
    kb, kn = backends
    sc = small_mix()
    cum, calphas, kinds, params, _, _ = sc.pack
    vb, vn = np.zeros(sc.servers), np.zeros(sc.servers)
    ob = kb.pile_run(0, 5, vb, 0.0, 0, 20_000, 1 << 10, cum, calphas,
                     kinds, params)
    on = kn.pile_run(0, 5, vn, 0.0, 0, 20_000, 1 << 10, cum, calphas,
                     kinds, params)
    assert ob == on
    assert np.array_equal(vb, vn)


def test_sps_range_bit_identity(backends):
    kb, kn = backends
    sc = small_mix()
    s = sc.servers
    outs = []
    for k in (kb, kn):
        w = np.empty((4, s))
        ell = np.empty(4, dtype=np.int64)
        doub = np.empty(4, dtype=np.int64)
        conv = np.zeros(4, dtype=np.bool_)
        k.sps_range(0, 10, 14, 200, 1 << 18, *sc.pack, w, ell, doub, conv)
        outs.append((w, ell, doub, conv))
    for a, b in zip(*outs):
        assert np.array_equal(a, b)
