import numpy as np
import pytest

from phaseplane.sampling import SampledFunction, Sampling
from phaseplane.utils import GridMismatchError, PreconditionError
from phaseplane.wave_packets import (
    PacketCache,
    WavePacket,
    build_mother_wavelet,
    check_fits,
    coefficients,
    inner,
    mother_spectrum,
    packet_overlap_bound,
    periodization,
    synthesize,
    synthesize_packet,
    synthesize_packets,
)

from .conftest import make_tile


def test_mother_spectrum_values():
    assert mother_spectrum(0.0) == 1.0
    assert mother_spectrum(1 / 40) == pytest.approx(2**-0.5)
    assert mother_spectrum(0.05) == 0.0
    assert mother_spectrum(-0.2) == 0.0
    xi = np.linspace(-0.06, 0.06, 1001)
    np.testing.assert_array_equal(mother_spectrum(xi), mother_spectrum(-xi))
    np.testing.assert_allclose(periodization(np.linspace(-1, 1, 5001)), 1.0, atol=1e-12)


def test_verify(mw):
    report = mw.verify()
    assert report["periodization_error"] < 1e-9
    assert len(report["orthogonality"]) == 10
    assert max(report["orthogonality"].values()) < 1e-8
    assert report["norm_squared"] == pytest.approx(1 / 20, rel=1e-10)
    assert report["imaginary_residue"] < 1e-12
    assert mw.norm_squared == 1 / 20


def test_build_mother_wavelet_preconditions():
    with pytest.raises(PreconditionError):
        build_mother_wavelet(N=16384, L=39.0)
    # [-1/20, 1/20] holds too few spectral samples
    with pytest.raises(PreconditionError):
        build_mother_wavelet(N=4096, L=100.0)
    with pytest.raises(PreconditionError):
        build_mother_wavelet(N=1000, L=512.0)
    assert build_mother_wavelet(N=8192, L=320.0).sampling.half_length == 320.0


def test_packet_is_supported_in_its_lower_frequency_half(mw):
    for k, n, m in [(0, 0, 0), (1, -3, 2), (-2, 40, 1), (2, 5, 9)]:
        P = make_tile(k, n, m)
        packet = synthesize_packet(mw, P)
        xi = mw.sampling.frequencies
        mass = np.abs(packet.spectrum()) ** 2
        outside = ~((xi >= P.w_d.left) & (xi < P.w_d.right))
        assert mass[outside].sum() <= 1e-20 * mass.sum()
        assert packet.values.norm(2) ** 2 == pytest.approx(1 / 20, rel=1e-6)


def test_packets_of_translated_tiles_are_orthogonal(mw):
    P, P2 = make_tile(0, 0, 1), make_tile(0, 20, 1)
    a, b = synthesize_packets(mw, [P, P2])
    assert abs(complex(inner(a.values, b.values))) < 1e-8
    # Disjoint lower halves in frequency
    c = synthesize_packet(mw, make_tile(0, 0, 2))
    assert abs(complex(inner(a.values, c.values))) < 1e-12


def test_check_fits():
    S = Sampling(512.0, 16384)
    check_fits(S, make_tile(0, 0, 0))
    # Outside the window
    with pytest.raises(PreconditionError):
        check_fits(S, make_tile(0, 600, 0))
    # Past the Nyquist frequency
    with pytest.raises(PreconditionError):
        check_fits(S, make_tile(0, 0, 8))
    # Too coarse for the window's spectral resolution
    with pytest.raises(PreconditionError):
        check_fits(S, make_tile(6, 0, 0))


def test_coefficients_and_synthesize(mw):
    tiles = [make_tile(0, 0, 0), make_tile(0, 20, 0), make_tile(1, 2, 3)]
    packets = synthesize_packets(mw, tiles)
    f = packets[0].values
    coef = coefficients(f, packets)
    assert coef.shape == (3,)
    assert coef[0] == pytest.approx(1 / 20, rel=1e-10)
    assert abs(coef[1]) < 1e-8

    # Orthogonal packets: synthesis then analysis gives the coefficients back
    g = synthesize(mw.sampling, f.space, np.array([1.0, 2.0j]), packets[:2])
    np.testing.assert_allclose(coefficients(g, packets[:2]) * 20, [1.0, 2.0j], atol=1e-6)

    assert coefficients(f, []).shape == (0,)
    other = SampledFunction.zeros(Sampling(512.0, 8192))
    with pytest.raises(GridMismatchError):
        inner(other, f)


def test_packet_overlap_bound(mw):
    P = make_tile(1, 0, 0)
    lhs, rhs = packet_overlap_bound(mw, P, P)
    assert lhs == pytest.approx(1 / 20, rel=1e-6)
    assert rhs > 0

    # Both sides shrink away from I_P
    near = packet_overlap_bound(mw, P, make_tile(0, 0, 0))
    far = packet_overlap_bound(mw, P, make_tile(0, 200, 0))
    assert far[1] < near[1]
    assert far[0] < near[0]

    with pytest.raises(PreconditionError):
        packet_overlap_bound(mw, make_tile(0, 0, 0), P)


def test_packet_cache(mw):
    cache = PacketCache(maxsize=2)
    packets = [synthesize_packet(mw, make_tile(0, n, 0), cache=False) for n in range(3)]
    for i, p in enumerate(packets):
        assert cache.insert(i, p) is p
    assert len(cache) == 2
    assert cache.get(0) is None
    # Existing entries win
    assert cache.insert(1, packets[0]) is packets[1]
    cache.clear()
    assert len(cache) == 0

    P = make_tile(0, 4, 1)
    assert synthesize_packet(mw, P) is synthesize_packet(mw, P)
    assert isinstance(synthesize_packet(mw, P, cache=False), WavePacket)
