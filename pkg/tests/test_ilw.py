import numpy as np
import pytest
from hypothesis import given, strategies as st

from rsdual.dynamics import FlowForm, SelfDualState, integrate, rescale_constant, selfdual_velocity
from rsdual.elliptic import Elliptic, Hyperbolic, Rational, eisenstein_e1, kronecker_phi
from rsdual.errors import InvalidParams, PoleHit, QuadratureDiverged, ShapeMismatch
from rsdual.ilw import (
    PeriodicSignal,
    PoleField,
    apply_T_fourier,
    apply_T_kernel,
    discrete_T_expansion,
    discrete_T_of_field,
    eval_F_minus,
    eval_F_plus,
    eval_f,
    hyperbolic_kernel_limit_residual,
    ilw_residual,
    kdv_multiplier_residual,
    pole_field_from_state,
    t_multiplier,
)

from conftest import ELL33, TAU_I, deg_state, ell_state, random_state
from oracles import numerical_residue, random_cell_points

N1 = (0.3 + 0.05j, 0.1 + 0.3j, 0.2 + 0.02j)


def real_signal(rng, modes=5, L=0.5, delta=1.0, f0=0.0):
    c = rng.normal(size=modes) + 1j * rng.normal(size=modes)
    coeffs = {}
    for n in range(1, modes + 1):
        coeffs[n], coeffs[-n] = c[n - 1], np.conj(c[n - 1])
    return PeriodicSignal(coeffs, L, delta, f0)


class TestPoleField:
    def test_residue_sum_example(self):
        # q - mu = eta here, so both residues vanish through theta(0)
        s = SelfDualState([0.3], [0.1], 0.2, TAU_I)
        fld = pole_field_from_state(s)
        assert abs(fld.res_q[0] - kronecker_phi(-0.2, 0.2, TAU_I)) < 1e-12
        assert abs(fld.res_q.sum() + fld.res_mu.sum()) < 1e-12

    def test_residue_sum_generic(self):
        s = SelfDualState([N1[0]], [N1[1]], N1[2], TAU_I)
        fld = pole_field_from_state(s)
        assert abs(fld.res_q[0] - kronecker_phi(-N1[2], N1[0] - N1[1], TAU_I)) < 1e-12
        assert abs(fld.res_mu[0] - kronecker_phi(N1[2], N1[1] - N1[0], TAU_I)) < 1e-12
        assert abs(fld.res_q[0] + fld.res_mu[0]) < 1e-12

    @pytest.mark.parametrize("form", list(FlowForm))
    def test_residues_are_velocities(self, form):
        s = ell_state()
        fld = pole_field_from_state(s, form)
        qd, md = selfdual_velocity(s, form)
        assert np.allclose(fld.res_q, qd, rtol=1e-10) and np.allclose(fld.res_mu, -md, rtol=1e-10)

    def test_theta_normalization_is_rescaled_phi(self, rng):
        s = ell_state()
        phi, th = pole_field_from_state(s, FlowForm.PHI), pole_field_from_state(s, FlowForm.THETA)
        c = rescale_constant(2, s.eta, s.kind)
        z = random_cell_points(rng, 1j, 10)
        assert np.allclose(eval_f(phi, z), c * np.asarray(eval_f(th, z)), rtol=1e-11)
        assert abs(phi.f0 - c * th.f0) < 1e-10 * abs(phi.f0)

    @pytest.mark.parametrize("form", list(FlowForm))
    def test_product_vs_partial_fractions(self, form, rng):
        s = ell_state(ELL33)
        fld = pole_field_from_state(s, form)
        z = random_cell_points(rng, 1j, 10)
        a = np.asarray(eval_f(fld, z))
        b = np.asarray(eval_f(fld, z, method="partial"))
        assert np.max(np.abs(a - b)) < 1e-10 * max(1.0, np.abs(a).max())
        split = np.asarray(eval_F_plus(fld, z)) - eval_F_minus(fld, z) + fld.f0
        assert np.max(np.abs(split - b)) < 1e-12 * max(1.0, np.abs(b).max())

    @pytest.mark.parametrize("kind", [Rational(), Hyperbolic()], ids=lambda k: k.name)
    def test_degenerate_partial_fractions(self, kind, rng):
        s = random_state(rng, kind, 3, 2)
        fld = pole_field_from_state(s, FlowForm.THETA)
        z = rng.normal(size=10) + 1j * rng.normal(size=10)
        a, b = np.asarray(eval_f(fld, z)), np.asarray(eval_f(fld, z, method="partial"))
        assert np.max(np.abs(a - b)) < 1e-10 * max(1.0, np.abs(a).max())

    def test_double_periodicity(self, rng):
        fld = pole_field_from_state(ell_state())
        z = random_cell_points(rng, 1j, 10)
        f = np.asarray(eval_f(fld, z))
        scale = max(1.0, np.abs(f).max())
        assert np.max(np.abs(eval_f(fld, z + 1) - f)) < 1e-10 * scale
        assert np.max(np.abs(eval_f(fld, z + TAU_I.tau) - f)) < 1e-10 * scale

    def test_numerical_residue(self):
        fld = pole_field_from_state(ell_state(), FlowForm.THETA)
        for pole, res in zip(fld.poles, fld.residues):
            got = numerical_residue(lambda z: eval_f(fld, z), pole)
            assert abs(got - res) < 1e-6

    def test_parity_of_symmetric_pair(self):
        s = SelfDualState([0.3], [-0.3], 0.2, TAU_I)
        fld = pole_field_from_state(s)
        z = 1j * np.array([0.1, 0.27, 0.41])
        assert np.max(np.abs(np.asarray(eval_f(fld, z)) - eval_f(fld, -z))) < 1e-11

    def test_pole_hit(self):
        fld = pole_field_from_state(ell_state())
        with pytest.raises(PoleHit):
            eval_f(fld, fld.poles_q[0])
        with pytest.raises(PoleHit):
            eval_F_plus(fld, fld.poles_q[0])

    def test_invariants(self):
        with pytest.raises(ShapeMismatch):
            PoleField([0.1], [0.2, 0.3], [1.0], [-0.5, -0.5], 0, 0.1, TAU_I)
        with pytest.raises(InvalidParams):
            PoleField([0.1], [0.2], [1.0], [1.0], 0, 0.1, TAU_I)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            eval_f(pole_field_from_state(ell_state()), 0.1, method="spline")


class TestIlwResidual:
    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("form", list(FlowForm))
    def test_pole_ansatz_residual(self, n, form, rng):
        s = {1: SelfDualState([N1[0]], [N1[1]], N1[2], TAU_I), 2: ell_state(), 3: ell_state(ELL33)}[n]
        z = random_cell_points(rng, 1j, 20)
        fld = pole_field_from_state(s, form)
        r = np.abs(np.asarray(ilw_residual(s, z, form, fld=fld)))
        # the theta normalization is order one; phi-form residues grow like the rescaling constant
        scale = 1.0 if form is FlowForm.THETA else max(1.0, np.abs(fld.residues).max(), abs(fld.f0))
        assert r.max() < 1e-9 * scale

    def test_random_states(self, rng):
        for n in (2, 3):
            s = random_state(rng, TAU_I, n, n)
            fld = pole_field_from_state(s, FlowForm.THETA)
            z = random_cell_points(rng, 1j, 20)
            scale = max(1.0, np.abs(fld.residues).max())
            assert np.abs(np.asarray(ilw_residual(s, z, FlowForm.THETA, fld=fld))).max() < 1e-9 * scale

    @pytest.mark.parametrize("form", list(FlowForm))
    def test_sensitivity(self, form, rng):
        s = ell_state()
        qd, md = selfdual_velocity(s, form)
        qd = qd.copy()
        qd[0] *= 1.01
        z = random_cell_points(rng, 1j, 5)
        assert np.abs(np.asarray(ilw_residual(s, z, form, velocities=(qd, md)))).min() > 1e-4

    def test_velocity_shape(self):
        with pytest.raises(ShapeMismatch):
            ilw_residual(ell_state(), 0.1, velocities=([1.0], [1.0, 2.0]))

    @pytest.mark.parametrize("kind", [Rational(), Hyperbolic()], ids=lambda k: k.name)
    def test_degenerate_kernels(self, kind, rng):
        s = random_state(rng, kind, 3, 2)
        z = rng.normal(size=10) + 1j * rng.normal(size=10)
        fld = pole_field_from_state(s, FlowForm.THETA)
        scale = max(1.0, np.abs(fld.residues).max())
        assert np.abs(np.asarray(ilw_residual(s, z, FlowForm.THETA))).max() < 1e-9 * scale

    def test_along_flow(self):
        tr = integrate(ell_state(), FlowForm.THETA, t_end=0.1, record_dt=0.025)
        z = np.array([0.05 + 0.7j, -0.3 + 0.2j])
        for s in tr.states:
            assert np.abs(np.asarray(ilw_residual(s, z, FlowForm.THETA))).max() < 1e-9


class TestDiscreteT:
    def test_equals_log_derivative(self, rng):
        s = ell_state()
        fld = pole_field_from_state(s, FlowForm.THETA)
        qd, md = selfdual_velocity(s, FlowForm.THETA)
        for x in random_cell_points(rng, 1j, 5):
            e1 = lambda w: eisenstein_e1(w, s.kind)  # noqa: E731
            dlog = -sum(qd[i] * (e1(x - s.q[i] + s.eta) - e1(x - s.q[i])) for i in range(2))
            dlog -= sum(md[i] * (e1(x - s.mu[i] - s.eta) - e1(x - s.mu[i])) for i in range(2))
            assert abs(dlog - discrete_T_of_field(fld, x)) < 1e-9

    def test_small_shift_expansion(self):
        fld = pole_field_from_state(ell_state(), FlowForm.THETA)
        x = -0.2 + 0.75j
        dev = [abs(discrete_T_of_field(fld, x, e) - discrete_T_expansion(fld, x, e)) for e in (1e-2, 1e-3)]
        assert 800 < dev[0] / dev[1] < 1250

    def test_shifted_pole(self):
        fld = pole_field_from_state(ell_state())
        with pytest.raises(PoleHit):
            discrete_T_of_field(fld, fld.poles_q[0] - fld.eta)


class TestPeriodicSignal:
    def test_rejects_zero_mode(self):
        with pytest.raises(InvalidParams):
            PeriodicSignal({0: 1.0})

    def test_rejects_bad_geometry(self):
        with pytest.raises(InvalidParams):
            PeriodicSignal({1: 1.0}, L=0)
        with pytest.raises(InvalidParams):
            PeriodicSignal({1: 1.0}, delta=-1)

    def test_evaluate(self):
        sig = PeriodicSignal({1: 0.5, -1: 0.5}, 0.5, 1.0, 2.0)
        assert sig(0.25) == pytest.approx(2.0 + np.cos(np.pi * 0.5))

    def test_immutable(self):
        sig = PeriodicSignal({1: 1.0})
        with pytest.raises(TypeError):
            sig.coeffs[2] = 1.0


class TestFourierT:
    def test_single_mode(self):
        out = apply_T_fourier(PeriodicSignal({1: 1.0}, 0.5, 1.0))
        assert out.coeffs[1] == pytest.approx(1j / np.tanh(2 * np.pi))

    @given(st.lists(st.complex_numbers(max_magnitude=5), min_size=1, max_size=6), st.floats(0.05, 5))
    def test_reality_preserved(self, cs, delta):
        coeffs = {}
        for n, c in enumerate(cs, start=1):
            coeffs[n], coeffs[-n] = c, np.conj(c)
        out = apply_T_fourier(PeriodicSignal(coeffs, 0.5, delta, 1.5))
        assert out.is_real(1e-12)
        x = np.linspace(-0.5, 0.5, 7)
        assert np.max(np.abs(np.imag(out(x)))) < 1e-10

    def test_benjamin_ono_limit(self):
        out = apply_T_fourier(PeriodicSignal({n: 1.0 for n in (-3, -2, -1, 1, 2, 3)}, 0.5, 50.0))
        assert max(abs(c - 1j * np.sign(n)) for n, c in out.coeffs.items()) < 1e-12

    def test_constant_annihilated(self):
        assert apply_T_fourier(PeriodicSignal({}, 0.5, 1.0, 3.0)).f0 == 0

    def test_multiplier_rejects_zero(self):
        with pytest.raises(InvalidParams):
            t_multiplier(0, 1.0, 0.5)


class TestKernelT:
    def test_matches_fourier(self, rng):
        sig = real_signal(rng)
        a, b = apply_T_fourier(sig), apply_T_kernel(sig, 512)
        assert max(abs(a.coeffs[n] - b.coeffs[n]) for n in sig.coeffs) < 1e-8

    @pytest.mark.parametrize("delta,L", [(0.3, 0.5), (2.0, 1.0), (1.0, 3.0)])
    def test_matches_fourier_geometry(self, delta, L, rng):
        sig = real_signal(rng, 3, L, delta, f0=0.7)
        a, b = apply_T_fourier(sig), apply_T_kernel(sig, 256)
        assert max(abs(a.coeffs[n] - b.coeffs[n]) for n in sig.coeffs) < 1e-8
        assert abs(b.f0) < 1e-10

    def test_sine_mode(self):
        sig = PeriodicSignal({2: 0.5j, -2: -0.5j}, 0.5, 1.0)  # -sin(2 pi x)
        a, b = apply_T_fourier(sig), apply_T_kernel(sig, 64)
        assert max(abs(a.coeffs[n] - b.coeffs[n]) for n in sig.coeffs) < 1e-10

    def test_zero_signal(self):
        out = apply_T_kernel(PeriodicSignal({1: 0.0}, 0.5, 1.0), 64)
        assert all(c == 0 for c in out.coeffs.values())

    def test_node_count(self):
        with pytest.raises(InvalidParams):
            apply_T_kernel(PeriodicSignal({5: 1.0}), 16)

    def test_divergence_detected(self):
        # a very thin strip makes the smooth part of the kernel hard to resolve
        sig = PeriodicSignal({1: 1.0, -1: 1.0}, 0.5, 0.004)
        with pytest.raises(QuadratureDiverged):
            apply_T_kernel(sig, 8)


class TestLimits:
    def test_kdv_ratio(self):
        ratio = kdv_multiplier_residual(1e-2, 0.5, 4) / kdv_multiplier_residual(1e-3, 0.5, 4)
        assert 900 <= ratio <= 1100

    def test_kdv_small(self):
        # the Laurent tail is (pi n delta / L)^3 / 45: below 1e-7 for |n| <= 2
        assert kdv_multiplier_residual(1e-3, 0.5, 2) < 1e-7
        a = np.pi * 4 * 1e-3 / 0.5
        assert kdv_multiplier_residual(1e-3, 0.5, 4) == pytest.approx(a**3 / 45, rel=1e-3)

    def test_kdv_bad_nmax(self):
        with pytest.raises(InvalidParams):
            kdv_multiplier_residual(1e-3, 0.5, 0)

    def test_hyperbolic_kernel(self):
        r20 = hyperbolic_kernel_limit_residual(0.3, 1.0, 20.0)
        r40 = hyperbolic_kernel_limit_residual(0.3, 1.0, 40.0)
        assert r20 < 1e-10 and r40 < r20

    def test_hyperbolic_kernel_monotone(self):
        vals = [hyperbolic_kernel_limit_residual(0.3, 1.0, L) for L in (1.0, 2.0, 4.0, 8.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("L", [1.0, 2.0, 3.0])
    def test_hyperbolic_kernel_direct(self, L):
        # compare with the unsummed elliptic kernel at moderate L
        x, delta = 0.3, 1.0
        kern = -eisenstein_e1(x / (2 * L), Elliptic.with_tau(1j * delta / L)) / np.pi / (2 * L)
        limit = -(1 / (2 * delta)) / np.tanh(np.pi * x / (2 * delta)) + x / (2 * delta * L)
        assert abs(abs(kern - limit) - hyperbolic_kernel_limit_residual(x, delta, L)) < 1e-12

    def test_hyperbolic_kernel_pole(self):
        with pytest.raises(PoleHit):
            hyperbolic_kernel_limit_residual(0.0, 1.0, 20.0)
        with pytest.raises(InvalidParams):
            hyperbolic_kernel_limit_residual(30.0, 1.0, 20.0)
