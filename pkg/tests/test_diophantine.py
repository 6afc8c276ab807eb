import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rcp3bp import diophantine as dio
from rcp3bp.errors import DomainError

GOLDEN = (math.sqrt(5) - 1) / 2
TURN_C = 1.0 / (2.0 * math.pi)

# quadratic-surd oracle (sympy, exact) for the infinite-depth gap of C_K
GAP_LIMITS = {
    2: (0.42264973081037423549, 0.57735026918962576451),
    3: (0.44174243050441599934, 0.55825756949558400066),
    5: (0.46065533708336838393, 0.53934466291663161607),
}


def _irrational_CK(K, rng, head=20):
    """Quadratic irrational in C_K: random head, random periodic tail."""
    return dio.ContinuedFraction(rng.integers(1, K + 1, head).tolist(),
                                 tuple(rng.integers(1, K + 1, 3).tolist()))


class TestExpansion:
    def test_golden(self):
        cf = dio.cf_expand((mpmath.sqrt(5) - 1) / 2, 30)
        assert set(cf.quotients) == {1}

    def test_silver(self):
        with mpmath.workdps(60):
            cf = dio.cf_expand(mpmath.sqrt(2) - 1, 40)
        assert set(cf.quotients) == {2}

    def test_rational_is_exact(self):
        cf = dio.cf_expand(Fraction(13, 29), 10)
        assert dio.cf_value(cf) == Fraction(13, 29)
        assert cf.truncated

    def test_periodic_value(self):
        assert float(dio.periodic_value((1,))) == pytest.approx(GOLDEN, abs=1e-16)
        assert float(dio.periodic_value((2,))) == pytest.approx(0.41421356237309504880, abs=1e-16)

    def test_rejects_bad_input(self):
        with pytest.raises(DomainError):
            dio.cf_expand(1.5, 5)
        with pytest.raises(DomainError):
            dio.ContinuedFraction((1, 0, 2))

    @given(st.integers(0, 10**6))
    def test_two_sided_approximation_bound(self, seed):
        rng = np.random.default_rng(seed)
        cf = dio.ContinuedFraction(rng.integers(1, 30, 40).tolist())
        x = dio.cf_value(cf)
        for n, (p, q) in enumerate(dio.convergents(cf)[:-1], start=1):
            lo, hi = dio.approximation_bounds(cf, n)
            err = abs(x - Fraction(p, q))
            assert lo < err < hi

    def test_convergent_recurrence(self):
        cf = dio.ContinuedFraction((3, 7, 15, 1, 292))
        conv = dio.convergents(cf)
        assert conv[-1] == (33102, 103993)  # reciprocal of the pi convergent
        for (p0, q0), (p1, q1) in zip(conv, conv[1:]):
            assert abs(p1 * q0 - p0 * q1) == 1


class TestConstantType:
    def test_golden_constant_type(self):
        assert dio.is_constant_type(GOLDEN, 0.38, 10**6)
        assert dio.diophantine_constant(GOLDEN, 10**5) == pytest.approx(0.381966, abs=1e-6)

    def test_rational_fails_at_denominator(self):
        assert not dio.is_constant_type(Fraction(5, 17), 1e-9, 17)
        assert dio.is_constant_type(Fraction(5, 17), 1e-9, 16)

    def test_entry_bounds(self):
        assert dio.entry_bound_check(dio.ContinuedFraction([1] * 10), 0.2)
        assert not dio.entry_bound_check(dio.ContinuedFraction([1, 7, 1]), 0.2)

    def test_CK_members_pass_lemma_bound(self, rng):
        for K in (2, 5, 10):
            for _ in range(5):
                omega = dio.cf_value(_irrational_CK(K, rng))
                assert dio.is_constant_type(omega, 1.0 / (K + 2), 10**5)

    def test_constant_type_implies_entry_bound(self, rng):
        # a checked range q <= Q only constrains quotients that follow a
        # convergent denominator within that range
        Q, checked = 10**4, 0
        for _ in range(200):
            cf = _irrational_CK(int(rng.integers(2, 12)), rng)
            gamma = float(rng.uniform(0.02, 0.3))
            if not dio.is_constant_type(dio.cf_value(cf), gamma, Q):
                continue
            digits = list(cf.quotients) + list(cf.period) * 10
            dens = [1] + [q for _, q in dio.convergents(dio.ContinuedFraction(digits))]
            reach = [a for a, q_prev in zip(digits, dens) if q_prev <= Q]
            assert dio.entry_bound_check(dio.ContinuedFraction(reach), gamma)
            checked += 1
        assert checked > 10


class TestCantorSets:
    def test_K1_single_point(self):
        vals = dio.enumerate_CK(1, 20)
        assert vals.size == 1 and vals[0] == pytest.approx(GOLDEN, abs=1e-8)

    def test_K2_depth3(self):
        vals = dio.enumerate_CK(2, 3)
        assert vals.size == 8
        assert np.all(np.diff(vals) > 0) and 0 < vals[0] and vals[-1] < 1
        expect = sorted(float(dio.cf_value(dio.ContinuedFraction((a, b, c))))
                        for a in (1, 2) for b in (1, 2) for c in (1, 2))
        np.testing.assert_allclose(vals, expect, rtol=0, atol=1e-16)

    def test_odd_position_monotonicity(self):
        base = [1, 2, 1, 2, 1]
        for pos in (0, 2, 4):
            bigger = list(base)
            bigger[pos] += 1
            assert dio.cf_value(dio.ContinuedFraction(bigger)) < dio.cf_value(dio.ContinuedFraction(base))

    @pytest.mark.parametrize("K", [2, 3, 5])
    def test_gap_limit_against_surd_oracle(self, K):
        g = dio.largest_gap_limit(K)
        assert g.left == pytest.approx(GAP_LIMITS[K][0], abs=1e-15)
        assert g.right == pytest.approx(GAP_LIMITS[K][1], abs=1e-15)
        assert g.width > 0

    def test_pruned_matches_full(self):
        full = dio.enumerate_CK(3, 10)
        pruned = dio.enumerate_CK(3, 10, resolution=1e-3)
        big = lambda v: {(round(a, 14), round(b, 14)) for a, b in zip(v, v[1:]) if b - a >= 1e-3}  # noqa: E731
        assert big(full) == big(pruned)

    def test_samples_lie_within_gap_width(self, rng):
        K = 4
        vals = dio.enumerate_CK(K, 25)
        width = dio.largest_gap(K, 25).width
        for _ in range(100):
            x = float(dio.cf_value(_irrational_CK(K, rng)))
            assert np.min(np.abs(vals - x)) <= width

    def test_K1_has_no_gap(self):
        with pytest.raises(DomainError):
            dio.largest_gap(1, 10)


class TestCassels:
    def test_zero_target(self):
        assert dio.dirichlet_inhomogeneous(GOLDEN, 0.0, 0.038, 10.0) == 0

    def test_golden_half(self):
        X = 10.0
        A = 0.38 / X
        q = dio.dirichlet_inhomogeneous(GOLDEN, 0.5, A, X)
        b = dio.cassels_bounds(A, X)
        brute = [k for k in range(-int(b.X1), int(b.X1) + 1)
                 if float(dio.circle_norm(k * GOLDEN - 0.5)) <= b.A1]
        assert brute and abs(q) == min(abs(k) for k in brute)

    def test_precondition_violation_names_x(self):
        with pytest.raises(dio.PreconditionViolation) as exc:
            dio.dirichlet_inhomogeneous(Fraction(1, 3), 0.2, 0.01, 10.0)
        assert exc.value.x == 3

    def test_exhaustive_bounds(self, rng):
        for _ in range(100):
            omega = float(dio.cf_value(_irrational_CK(6, rng)))
            X = float(rng.uniform(5, 200))
            A = 0.99 / (8 * X)
            a = float(rng.uniform())
            try:
                q = dio.dirichlet_inhomogeneous(omega, a, A, X)
            except dio.PreconditionViolation:
                continue
            b = dio.cassels_bounds(A, X)
            assert abs(q) <= b.X1
            mp_dist = mpmath.mpf(q) * mpmath.mpf(omega) - a
            assert float(abs(mp_dist - mpmath.nint(mp_dist))) <= b.A1


class TestRotationOrbit:
    def test_q_star_lower_bound(self):
        gamma = dio.diophantine_constant(GOLDEN, 10**5)
        for mu in (1e-4, 1e-6, 1e-8, 1e-10):
            st_ = dio.rotation_orbit_stats(GOLDEN, TURN_C, mu, 0.15, gamma)
            assert st_.q_star >= gamma * mu ** -0.15 / (4 * TURN_C) - 1

    @given(st.integers(0, 10**6), st.integers(2, 3000))
    def test_three_distance(self, seed, N):
        rng = np.random.default_rng(seed)
        omega = float(rng.uniform(0.01, 0.99))
        # independent oracle: exact rationals for the points
        w = Fraction(omega)
        pts = sorted((q * w) % 1 for q in range(N + 1))
        gaps = {pts[i + 1] - pts[i] for i in range(N)} | {1 + pts[0] - pts[-1]}
        assert len(gaps) <= 3
        ours = dio.circle_gaps(dio.frac_multiples(omega, np.arange(N + 1)))
        np.testing.assert_allclose(np.sort(ours), np.sort([float(g) for g in
                                   [pts[i + 1] - pts[i] for i in range(N)] + [1 + pts[0] - pts[-1]]]),
                                   atol=1e-12)

    def test_max_gap_tracks_gamma(self):
        ratios = []
        for mu in (1e-5, 1e-6, 1e-8, 1e-10):
            gamma = mu ** 0.05
            st_ = dio.rotation_orbit_stats(GOLDEN, TURN_C, mu, 0.15, gamma)
            ratios.append(st_.max_gap / gamma)
        print("max_gap / gamma:", ", ".join(f"{r:.3g}" for r in ratios))
        assert max(ratios) < 1.0

    def test_max_gap_shrinks_with_q_star(self):
        gaps = [dio.rotation_orbit_stats(GOLDEN, TURN_C, mu, 0.15, 1.0) for mu in (1e-4, 1e-8, 1e-12)]
        assert gaps[0].q_star < gaps[1].q_star < gaps[2].q_star
        assert gaps[0].max_gap > gaps[1].max_gap > gaps[2].max_gap

    def test_extended_precision_multiples(self):
        omega = (mpmath.sqrt(5) - 1) / 2
        q = 2**25 - 3
        with mpmath.workdps(60):
            exact = float(mpmath.frac(q * omega))
        assert dio.frac_multiples(omega, [q])[0] == pytest.approx(exact, abs=1e-14)


class TestTwoCollisions:
    mu = 1e-6
    thr = 4 * TURN_C * 1e-6 ** 0.15

    def test_q_star_horizon_leaves_no_clear_window(self):
        # up to q* the backward orbit is 2 thr dense, so some flag always fails
        q_star = dio.find_q_star(GOLDEN, self.thr)
        grid = np.linspace(0, 1, 2001)[1:-1]
        assert not any(all(dio.two_collision_clearance(GOLDEN, x, TURN_C, self.mu, 0.15, q_star))
                       for x in grid)

    def test_short_horizon_both_clear(self):
        mu, steps = 1e-12, 3
        thr = 4 * TURN_C * mu ** 0.15
        pts = dio.frac_multiples(GOLDEN, -np.arange(steps + 1))
        grid = np.linspace(0, 1, 4001)[1:-1]
        ok = [x for x in grid if all(dio.two_collision_clearance(GOLDEN, x, TURN_C, mu, 0.15, steps))]
        assert ok
        for x in ok:
            assert np.min(dio.circle_norm(pts - x)) >= thr
            assert np.min(dio.circle_norm(pts + x)) >= thr

    def test_single_failure_instance(self):
        q_star = dio.find_q_star(GOLDEN, self.thr)
        q1 = 1
        # place the second collision on the backward orbit of 0, and check
        # the symmetric orbit stays away
        x = float(dio.frac_multiples(GOLDEN, [-q1])[0])
        flags = dio.two_collision_clearance(GOLDEN, x, TURN_C, self.mu, 0.15, q_star)
        assert flags[0] is False

    def test_both_fail_counterexample(self):
        # backward orbit of l'' = -q1 omega reaches -(q*+1) omega, which is
        # within the threshold of 0 by definition of q*
        q_star = dio.find_q_star(GOLDEN, self.thr)
        x = float(dio.frac_multiples(GOLDEN, [-1])[0])
        assert dio.two_collision_clearance(GOLDEN, x, TURN_C, self.mu, 0.15, q_star) == (False, False)
        assert dio.both_fail_witness(GOLDEN, x, TURN_C, self.mu, 0.15, q_star) is not None

    def test_both_fail_forces_small_return(self, rng):
        for K in (3, 10):
            for _ in range(300):
                omega = float(dio.cf_value(_irrational_CK(K, rng)))
                q_star = dio.find_q_star(omega, self.thr)
                x = float(rng.uniform())
                w = dio.both_fail_witness(omega, x, TURN_C, self.mu, 0.15, q_star)
                if w is None:
                    continue
                n = w[0] + w[1]
                assert float(dio.circle_norm(dio.frac_multiples(omega, [n])[0])) < 2 * self.thr


class TestRecurrenceClearance:
    @staticmethod
    def _setup(mu):
        gamma = mu ** 0.05
        q_rec = dio.recurrence_q_star(TURN_C, mu, 0.15, gamma)
        return gamma, q_rec, max(1, q_rec // 10)

    def test_first_collision_clearance(self):
        mu = 1e-10
        _, _, q_hat = self._setup(mu)
        unit = TURN_C * mu ** 0.15
        if np.all(dio.circle_norm(dio.frac_multiples(GOLDEN, np.arange(1, q_hat + 1))) >= 20 * unit):
            assert dio.orbit_clearance(GOLDEN, 10 * unit, [-4 * unit], q_hat) >= 6 * unit - 1e-15

    @pytest.mark.parametrize("mu", [1e-8, 1e-10, 1e-12])
    def test_near_miss_second_collision(self, mu):
        _, _, q_hat = self._setup(mu)
        unit = TURN_C * mu ** 0.15
        for q_prime in range(-q_hat, q_hat + 1):
            second = float(dio.frac_multiples(GOLDEN, [q_prime])[0]) + 3 * unit
            assert dio.shifted_orbit_clearance(GOLDEN, 10 * unit, [-4 * unit, second], q_hat, 6 * unit)

    @pytest.mark.parametrize("mu", [1e-10, 1e-12, 1e-14])
    def test_contradiction_bound_unreachable(self, mu):
        gamma, _, q_hat = self._setup(mu)
        assert q_hat < gamma * mu ** -0.15 / (36 * TURN_C)

    def test_q_hat_floor_binds_at_desk_scale(self):
        # at mu = 1e-4 the recurrence count rounds to the floor value 1
        gamma, q_rec, q_hat = self._setup(1e-4)
        assert q_rec == 1 and q_hat == 1
