import math

import pytest

from siftshadow import (
    BackwardBranch,
    DepthTooLarge,
    DepthTooSmall,
    check_t_gamma_set,
    circle_dist,
    doubling,
    enumerate_branches,
    extension_metric,
    neutral_fixed,
    perturbed_doubling,
    pl_tent,
    validate_branch,
)

LOG2 = math.log(2.0)


class TestEnumerateBranches:
    def test_doubling_depth_two(self):
        branches = enumerate_branches(doubling(), 0.0, 2)
        assert len(branches) == 4
        histories = sorted(tuple(b.history) for b in branches)
        assert histories == [
            (0.0, 0.0),
            (0.0, 0.5),
            (0.5, 0.25),
            (0.5, 0.75),
        ]

    def test_depth_zero_single(self):
        branches = enumerate_branches(doubling(), 0.37, 0)
        assert len(branches) == 1
        assert branches[0].history == ()
        assert branches[0].present == 0.37

    def test_perturbed_depth_three_consistent(self):
        sys = perturbed_doubling(0.05)
        branches = enumerate_branches(sys, 0.3, 3)
        assert len(branches) == 8
        for b in branches:
            validate_branch(sys, b)

    def test_count_is_degree_power(self):
        sys = pl_tent(3.0, 1.5)
        for d in (1, 2, 5):
            assert len(enumerate_branches(sys, 0.42, d)) == 2**d

    def test_forward_evaluation_error_bound(self):
        sys = perturbed_doubling(0.1)
        depth = 6
        for b in enumerate_branches(sys, 0.71, depth):
            x = b.history[-1]
            for _ in range(depth):
                x = sys.step(x)
            assert circle_dist(x, b.present) <= depth * 1e-10

    def test_depth_cap(self):
        with pytest.raises(DepthTooLarge):
            enumerate_branches(doubling(), 0.1, 21)


class TestExtensionMetric:
    def test_identical_zero(self):
        a = enumerate_branches(doubling(), 0.25, 3)[0]
        assert extension_metric(a, a) == 0.0

    def test_single_term_example(self):
        a = BackwardBranch(present=0.2, history=(0.1,))
        b = BackwardBranch(present=0.2, history=(0.6,))
        assert extension_metric(a, b) == pytest.approx(0.25)

    def test_matches_direct_sum(self, rng):
        for _ in range(100):
            d = int(rng.integers(0, 6))
            a = BackwardBranch(0.0 + rng.random(), tuple(rng.random(d)))
            b = BackwardBranch(0.0 + rng.random(), tuple(rng.random(d)))
            direct = sum(
                2.0**-i * min(1.0, circle_dist(a.point(-i), b.point(-i)))
                for i in range(d + 1)
            )
            assert extension_metric(a, b) == pytest.approx(direct, rel=1e-12)

    def test_triangle_inequality(self, rng):
        pts = rng.random((10_000, 3, 4))
        for row in pts:
            a = BackwardBranch(row[0][0], tuple(row[0][1:]))
            b = BackwardBranch(row[1][0], tuple(row[1][1:]))
            c = BackwardBranch(row[2][0], tuple(row[2][1:]))
            dab = extension_metric(a, b)
            dbc = extension_metric(b, c)
            dac = extension_metric(a, c)
            assert dac <= dab + dbc + 1e-12


class TestTGammaSet:
    def test_doubling_passes_with_zero_phase(self):
        sys = doubling()
        branches = enumerate_branches(sys, 0.3, 5)
        reports = check_t_gamma_set(sys, branches, t=1, gamma=LOG2 - 1e-9, r_max=4)
        assert all(r.passes and r.witness_m == 0 for r in reports)

    def test_neutral_branch_fails(self):
        sys = neutral_fixed(0.75)
        branch = BackwardBranch(present=0.0, history=(0.0,) * 6)
        validate_branch(sys, branch)
        reports = check_t_gamma_set(sys, [branch], t=2, gamma=0.05, r_max=4)
        assert not reports[0].passes
        assert reports[0].witness_m is None
        assert len(reports[0].failures) == 2

    def test_depth_too_small(self):
        sys = doubling()
        branch = enumerate_branches(sys, 0.3, 3)[0]
        with pytest.raises(DepthTooSmall):
            check_t_gamma_set(sys, [branch], t=2, gamma=0.1, r_max=4)

    def test_payload_matches_schema(self):
        from siftshadow import __version__, tgamma_report_payload
        from siftshadow.reporting import validate_report

        sys = doubling()
        branches = enumerate_branches(sys, 0.3, 6)[:2]
        reports = check_t_gamma_set(sys, branches, t=2, gamma=0.5, r_max=4)
        payload = tgamma_report_payload(sys, 2, 0.5, 4, reports, __version__)
        assert validate_report(payload) == "tgamma"

    def test_pl_tent_matches_window_oracle(self):
        sys = pl_tent(3.0, 1.5)
        t, r_max = 3, 5
        branches = enumerate_branches(sys, 0.47, t + r_max)
        reports = check_t_gamma_set(sys, branches, t=t, gamma=0.6, r_max=r_max)
        for br, rep in zip(branches, reports):
            # brute-force oracle: rebuild the two-sided increment sequence
            # and scan every (m, r) window directly
            seq = {}
            for p in range(-r_max, t - 1):
                if p < 0:
                    pt = br.point(p)
                else:
                    pt = br.present
                    for _ in range(p):
                        pt = sys.step(pt)
                seq[p] = math.log(abs(sys.deriv(pt)))
            expected_pass = False
            witness = None
            for m in range(t):
                ok = all(
                    sum(seq[m - r + i] for i in range(r)) / r >= 0.6
                    for r in range(1, r_max + 1)
                )
                if ok:
                    expected_pass = True
                    witness = m
                    break
            assert rep.passes == expected_pass
            assert rep.witness_m == witness
