"""Trade balance, perturbations and sensitivity differencing."""

from decimal import Decimal, localcontext

import numpy as np
import pytest

from wtnrank import (
    MoneyMatrix,
    ProbabilityVector,
    SensitivityConfig,
    balance_sensitivity,
    gma_balance,
    gma_country_probabilities,
    iea_balance,
    perturb_money,
    sensitivity_richardson,
    trade_balance,
)
from wtnrank.analysis import write_balance, write_sensitivity
from wtnrank.errors import ConvergenceError
from wtnrank.testkit import SyntheticSpec, synthetic_money, synthetic_registry

from conftest import money_from_dense


def country_vec(values, kind="pagerank"):
    codes = tuple(f"C{i:03d}" for i in range(len(values)))
    return ProbabilityVector(np.asarray(values, dtype=float), kind, "country", codes)


class TestTradeBalance:
    def test_equal_gives_zero(self):
        B = trade_balance(country_vec([0.25, 0.75]), country_vec([0.25, 0.75]), "gma")
        assert np.array_equal(B.values, [0.0, 0.0])

    def test_triple_gives_half(self):
        P = country_vec([0.1, 0.2])
        Pstar = country_vec([0.3, 0.6])
        B = trade_balance(P, Pstar, "gma")
        assert np.allclose(B.values, [0.5, 0.5], atol=1e-15, rtol=0)

    def test_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            p = rng.random(6)
            q = rng.random(6)
            B = trade_balance(country_vec(p / p.sum()), country_vec(q / q.sum()), "iea")
            assert np.all(np.abs(B.values) <= 1.0)

    def test_zero_denominator_marks_undefined(self):
        B = trade_balance(country_vec([0.0, 1.0]), country_vec([0.0, 1.0]), "gma")
        assert np.isnan(B.values[0]) and B.values[1] == 0.0
        assert B.undefined() == ("C000",)

    def test_extreme_value_only_at_zero_side(self):
        B = trade_balance(country_vec([0.0, 0.5]), country_vec([0.5, 0.5]), "gma")
        assert B.values[0] == 1.0

    def test_input_validation(self):
        with pytest.raises(ValueError):
            trade_balance(country_vec([1.0]), country_vec([1.0]), "nonsense")
        with pytest.raises(ValueError):
            trade_balance(
                country_vec([1.0, 0.0]),
                ProbabilityVector(np.array([1.0]), "cheirank", "country", ("X",)),
                "gma",
            )

    def test_symmetric_fixture_balances_zero(self, symmetric_money):
        for B in (gma_balance(symmetric_money), iea_balance(symmetric_money)):
            assert np.abs(B.values).max() < 1e-10

    def test_sign_agreement_two_countries_one_product(self):
        dense = np.zeros((1, 2, 2))
        dense[0, 0, 1] = 30.0  # C001 only exports, C000 only imports
        money = money_from_dense(dense)
        gma = gma_balance(money)
        iea = iea_balance(money)
        assert np.all(np.sign(gma.values) == np.sign(iea.values))
        assert gma.values[1] > 0 > gma.values[0]

    def test_two_way_two_country_gma_balance_is_scale_blind(self):
        # column normalization erases flow magnitudes on a 2-node network,
        # so GMA balance is exactly 0 however lopsided the values are
        dense = np.zeros((1, 2, 2))
        dense[0, 0, 1] = 30.0
        dense[0, 1, 0] = 10.0
        money = money_from_dense(dense)
        assert np.abs(gma_balance(money).values).max() < 1e-12
        assert iea_balance(money).values[1] == 0.5


class TestPerturbMoney:
    def test_zero_delta_identity(self, small_money):
        assert perturb_money(small_money, 0, 0.0).entries == small_money.entries

    def test_global_slice_doubling(self, small_money):
        doubled = perturb_money(small_money, 1, 1.0)
        with localcontext() as ctx:
            ctx.prec = 60
            for (p, imp, exp), value in small_money.entries.items():
                expected = value * 2 if p == 1 else value
                assert doubled.entries[(p, imp, exp)] == expected

    def test_country_export_scaling(self, small_money):
        target = small_money.registry.codes[1]
        scaled = perturb_money(small_money, 0, 0.5, country=target)
        with localcontext() as ctx:
            ctx.prec = 60
            for (p, imp, exp), value in small_money.entries.items():
                hit = p == 0 and exp == 1
                assert scaled.entries[(p, imp, exp)] == (value * Decimal(1.5) if hit else value)

    def test_country_import_scaling(self, small_money):
        target = small_money.registry.codes[1]
        scaled = perturb_money(small_money, 0, 0.5, country=target, side="import")
        with localcontext() as ctx:
            ctx.prec = 60
            for (p, imp, exp), value in small_money.entries.items():
                hit = p == 0 and imp == 1
                assert scaled.entries[(p, imp, exp)] == (value * Decimal(1.5) if hit else value)

    def test_delta_floor(self, small_money):
        with pytest.raises(ValueError):
            perturb_money(small_money, 0, -1.0)

    def test_product_range(self, small_money):
        with pytest.raises(ValueError):
            perturb_money(small_money, small_money.n_products, 0.1)


class TestSensitivity:
    def test_zero_volume_slice_gives_zeros(self):
        dense = np.zeros((2, 3, 3))
        dense[0, 1, 0] = 10.0
        dense[0, 2, 1] = 5.0
        dense[0, 0, 2] = 2.0
        money = money_from_dense(dense)
        for source in ("gma", "iea"):
            sens = balance_sensitivity(money, SensitivityConfig(product=1, source=source))
            assert np.array_equal(sens.values, np.zeros(3))

    def test_single_product_global_perturbation_null(self):
        # dense enough that every country trades, so no balance is undefined
        money = synthetic_money(SyntheticSpec(seed=4, n_countries=6, n_products=1, density=0.8))
        for source in ("gma", "iea"):
            sens = balance_sensitivity(money, SensitivityConfig(product=0, source=source))
            assert not np.any(np.isnan(sens.values))
            assert np.abs(sens.values).max() < 1e-8

    @pytest.mark.parametrize("source", ["gma", "iea"])
    def test_richardson_ratio(self, source):
        money = synthetic_money(SyntheticSpec(seed=7, n_countries=8, n_products=3, density=0.4))
        result = sensitivity_richardson(money, SensitivityConfig(product=1, source=source))
        mask = np.abs(result["d_h2"] - result["d_h4"]) > 1e-9
        assert mask.any()
        assert np.all((result["ratio"][mask] >= 3.0) & (result["ratio"][mask] <= 5.0))

    def test_reports_attached_for_gma(self, small_money):
        sens = balance_sensitivity(small_money, SensitivityConfig(product=0))
        assert len(sens.reports) == 4  # direct+inverted for +h and -h
        assert all(r.converged for r in sens.reports)

    def test_iea_has_no_solver_reports(self, small_money):
        sens = balance_sensitivity(small_money, SensitivityConfig(product=0, source="iea"))
        assert sens.reports == ()

    def test_non_convergence_escalates(self, small_money):
        config = SensitivityConfig(product=0, tol=1e-15, max_iter=2)
        with pytest.raises(ConvergenceError) as err:
            balance_sensitivity(small_money, config)
        assert err.value.report is not None
        assert not err.value.report.converged

    def test_config_validation(self):
        with pytest.raises(ValueError):
            SensitivityConfig(product=0, step=0.0)
        with pytest.raises(ValueError):
            SensitivityConfig(product=0, source="raw")
        with pytest.raises(ValueError):
            SensitivityConfig(product=0, side="both")

    def test_country_target_differs_from_global(self, small_money):
        code = small_money.registry.codes[0]
        global_sens = balance_sensitivity(small_money, SensitivityConfig(product=0))
        country_sens = balance_sensitivity(
            small_money, SensitivityConfig(product=0, country=code)
        )
        assert not np.allclose(global_sens.values, country_sens.values)


class TestProbabilitySources:
    def test_gma_probabilities_normalized(self, small_money):
        p_c, pstar_c, reports = gma_country_probabilities(small_money)
        p_c.validate()
        pstar_c.validate()
        assert all(r.converged for r in reports)

    def test_personalization_mode_changes_result(self, small_money):
        default, _, _ = gma_country_probabilities(small_money)
        weighted, _, _ = gma_country_probabilities(
            small_money, personalization="volume-by-country"
        )
        assert not np.allclose(default.values, weighted.values)


class TestWriters:
    def test_balance_file(self, symmetric_money, tmp_path):
        gma = gma_balance(symmetric_money)
        iea = iea_balance(symmetric_money)
        path = write_balance(tmp_path / "balance.csv", gma, iea)
        lines = path.read_text().splitlines()
        assert lines[0] == "country,B_gma,B_iea"
        assert len(lines) == 3
        code, b_gma, b_iea = lines[1].split(",")
        assert code == "C000"
        assert abs(float(b_gma)) < 1e-10 and abs(float(b_iea)) < 1e-10

    def test_balance_file_requires_both_sources(self, symmetric_money, tmp_path):
        gma = gma_balance(symmetric_money)
        with pytest.raises(ValueError):
            write_balance(tmp_path / "balance.csv", gma, gma)

    def test_nan_is_rendered(self, tmp_path):
        B_gma = trade_balance(country_vec([0.0, 1.0]), country_vec([0.0, 1.0]), "gma")
        B_iea = trade_balance(
            country_vec([0.0, 1.0], "import_volume"),
            country_vec([0.0, 1.0], "export_volume"),
            "iea",
        )
        path = write_balance(tmp_path / "balance.csv", B_gma, B_iea)
        assert path.read_text().splitlines()[1] == "C000,nan,nan"

    def test_sensitivity_file(self, small_money, tmp_path):
        sens = balance_sensitivity(small_money, SensitivityConfig(product=0))
        path = write_sensitivity(tmp_path / "sens.csv", sens)
        lines = path.read_text().splitlines()
        assert lines[0] == "country,dB_ddelta"
        assert len(lines) == 1 + small_money.n_countries
        code, value = lines[1].split(",")
        assert code == sens.codes[0]
        assert float(value) == sens.values[0]
