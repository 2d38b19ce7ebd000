"""End-to-end acceptance suite.

Each test class pins one headline behavior at desk scale: the bond-index
replay, the printed metric tables, the hybrid detector, statistical-oracle
equivalence, the imputation gain study, matrix completion accuracy, runner
parallelism with crash recovery, and the sign-off gate state machine.
Timing bounds are generous so the suite stays green on loaded boxes, but
they still catch order-of-magnitude regressions.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

import test_impute
from conftest import FROZEN_NOW, bond_frame, drive_gate_machine, write_csv
from tabqc.config import parse_config
from tabqc.dataset import Column, Dataset
from tabqc.governance import Ledger
from tabqc.impute import impute_dataset, impute_mice, impute_softimpute
from tabqc.ml import (FeatureMatrix, calibrate_threshold, evaluate,
                      fit_isolation_forest, fit_score_augmented_classifier,
                      predict, score, train_test_split)
from tabqc.runner import checkpoint_resume, run_pipeline
from test_outliers import check_series_against_oracle, random_series

CORES = len(os.sched_getaffinity(0))
DATE = "20111220"
RUN_ID = "corporate_bonds_" + DATE


def out_block(root: Path) -> dict:
    return {"status_file": str(root / "status.csv"),
            "breach_dir": str(root / "ledger"),
            "report_dir": str(root / "reports"),
            "profile_dir": str(root / "profiles")}


def write_sources(root: Path, frame, sids) -> list:
    docs = []
    for sid in sids:
        target = root / "in" / DATE / f"{sid}.csv"
        target.parent.mkdir(parents=True, exist_ok=True)
        write_csv(target, frame)
        docs.append({"source_id": sid,
                     "current_path": str(root / "in" / "{date}" / f"{sid}.csv")})
    return docs


class TestBondIndexReplay:
    """Longitudinal frame, 21 numeric + 1 categorical columns, one value
    spiked outside its trailing 10-observation min-max window but inside
    the 3-sigma band: only the min-max check may breach, and the status
    file layout is pinned byte for byte."""

    EXPECTED_STATUS = (
        "Series,Run Date,Check,Status Update Timestamp,Status\n"
        "20111220,20/12/2011,Missing Value Check,20/12/2011 09:30,"
        "Success - No Breach Detected\n"
        "20111220,20/12/2011,Positive Values Only,20/12/2011 09:30,"
        "Success - No Breach Detected\n"
        "20111220,20/12/2011,Outlier Check - Std-Dev Range,20/12/2011 09:30,"
        "Success - No Breach Detected\n"
        "20111220,20/12/2011,Outlier Check - Min-Max Range,20/12/2011 09:30,"
        "Success - Breach Detected\n"
        "20111220,20/12/2011,Value Delta Change Check,20/12/2011 09:30,"
        "Success - No Breach Detected\n")

    def test_replay_breaches_only_on_min_max_with_exact_status_file(self, tmp_path):
        frame = bond_frame()
        assert len(frame.numeric_columns()) == 21
        assert len(frame.columns) == 22
        config = parse_config({"spec": "corporate_bonds",
                               "sources": write_sources(tmp_path, frame, ["bond"]),
                               "output": out_block(tmp_path / "out")})

        started = time.perf_counter()
        record = run_pipeline(config, DATE, now=FROZEN_NOW)
        elapsed = time.perf_counter() - started

        assert Path(config.output["status_file"]).read_text() == self.EXPECTED_STATUS
        breaches = Ledger(root=config.output["breach_dir"]).list_breaches()
        assert len(breaches) == 1
        assert breaches[0].check == "Outlier Check - Min-Max Range"
        assert breaches[0].severity == "yellow"
        assert record["gate"] == "proceed"
        assert elapsed < 10.0


class TestMetricTables:
    """evaluate() reproduces both printed metric tables from their derived
    confusion matrices to 1e-4."""

    def test_supervised_table(self):
        # supports 9/11 with 8 and 10 correct: TN=8 FP=1 FN=1 TP=10
        y_true = [0] * 9 + [1] * 11
        y_pred = [0] * 8 + [1] + [1] * 10 + [0]
        rep = evaluate(y_true, y_pred)
        tol = 1e-4
        assert rep.per_class[0].precision == pytest.approx(0.888889, abs=tol)
        assert rep.per_class[1].precision == pytest.approx(0.909091, abs=tol)
        assert rep.per_class[0].recall == pytest.approx(0.888889, abs=tol)
        assert rep.per_class[1].recall == pytest.approx(0.909091, abs=tol)
        assert rep.per_class[0].f1 == pytest.approx(0.888889, abs=tol)
        assert rep.per_class[1].f1 == pytest.approx(0.909091, abs=tol)
        assert (rep.per_class[0].support, rep.per_class[1].support) == (9, 11)
        assert rep.accuracy == pytest.approx(0.9, abs=tol)
        assert rep.macro_f1 == pytest.approx(0.89899, abs=tol)
        assert rep.macro_precision == pytest.approx(0.89899, abs=tol)
        assert rep.weighted_precision == pytest.approx(0.9, abs=tol)
        assert rep.weighted_f1 == pytest.approx(0.9, abs=tol)
        assert rep.n == 20

    def test_unsupervised_table(self):
        # 14 class-0 all correct, 1 of 16 class-1 found: TN=14 FP=0 TP=1 FN=15
        y_true = [0] * 14 + [1] * 16
        y_pred = [0] * 14 + [1] + [0] * 15
        rep = evaluate(y_true, y_pred)
        tol = 1e-4
        assert rep.per_class[0].precision == pytest.approx(0.482759, abs=tol)
        assert rep.per_class[1].precision == pytest.approx(1.0, abs=tol)
        assert rep.per_class[0].recall == pytest.approx(1.0, abs=tol)
        assert rep.per_class[1].recall == pytest.approx(0.0625, abs=tol)
        assert rep.per_class[0].f1 == pytest.approx(0.651163, abs=tol)
        assert rep.per_class[1].f1 == pytest.approx(0.117647, abs=tol)
        assert (rep.per_class[0].support, rep.per_class[1].support) == (14, 16)
        assert rep.accuracy == pytest.approx(0.5, abs=tol)
        assert rep.macro_precision == pytest.approx(0.741379, abs=tol)
        assert rep.macro_recall == pytest.approx(0.531250, abs=tol)
        assert rep.macro_f1 == pytest.approx(0.384405, abs=tol)
        assert rep.weighted_precision == pytest.approx(0.758621, abs=tol)
        assert rep.weighted_recall == pytest.approx(0.500000, abs=tol)
        assert rep.weighted_f1 == pytest.approx(0.366621, abs=tol)
        assert rep.n == 30


class TestHybridDetector:
    """Balanced 100-per-class sample, 80/20 split, decision threshold 0.2:
    the score-augmented classifier must reach macro F1 >= 0.80."""

    @staticmethod
    def fraud_sample(seed, per_class=100, d=10):
        rng = np.random.default_rng(seed)
        normal = rng.normal(0.0, 1.0, size=(per_class, d))
        fraud = rng.normal(0.0, 1.0, size=(per_class, d))
        fraud[:, :3] += rng.choice([-2.5, 2.5], size=(per_class, 3))
        fraud *= rng.uniform(1.0, 2.0, size=(per_class, 1))
        values = np.vstack([normal, fraud])
        labels = np.array([0.0] * per_class + [1.0] * per_class)
        perm = rng.permutation(2 * per_class)
        return FeatureMatrix.of(values[perm], labels=labels[perm])

    def test_macro_f1_at_threshold(self):
        started = time.perf_counter()
        X = self.fraud_sample(seed=7)
        train, test = train_test_split(X, test_fraction=0.2, seed=7)
        assert (train.n, test.n) == (160, 40)
        battery = [{"kind": "iforest", "trees": 100, "subsample": 128},
                   {"kind": "pca", "k": 3}]
        model = fit_score_augmented_classifier(
            train, battery, rounds=60, depth=3, seed=7).with_threshold(0.2)
        y_pred = predict(model, test).astype(int)
        rep = evaluate(test.labels.astype(int).tolist(), y_pred.tolist())
        assert rep.macro_f1 >= 0.80
        assert time.perf_counter() - started < 60.0


class TestStatisticalOracles:
    """1,000 random series per method: flag sets equal an independent
    brute-force oracle exactly."""

    def test_thousand_series_per_method(self):
        rng = np.random.default_rng(20111220)
        for _ in range(1000):
            # min_observed=5 keeps all five methods evaluable on each series
            check_series_against_oracle(random_series(rng), rng)


class TestImputationGain:
    """MAR missingness study: a no-imputation pipeline cannot score rows
    carrying nulls and must flag them unvalidated, while the imputation-
    aware pipeline completes the matrix and scores everything. The aware
    pipeline must win on F1 (>= 30% relative) and FPR (>= 2x reduction)
    in at least 9 of 10 seeds."""

    @staticmethod
    def qc_frame(seed, n_normal=400, n_anom=40, d=6, masked_cols=(1, 2)):
        rng = np.random.default_rng(seed)
        n = n_normal + n_anom
        z = rng.normal(0.0, 0.5, size=(n, 1))
        values = 5.0 + z + rng.normal(0.0, 0.3, size=(n, d))
        labels = np.array([0] * n_normal + [1] * n_anom)
        for i in range(n_normal, n):  # dispersed, never on masked columns
            cols = rng.choice([3, 4, 5], size=2, replace=False)
            values[i, cols] += rng.choice([-1.0, 1.0], size=2) * \
                rng.uniform(1.5, 3.0, size=2)
        perm = rng.permutation(n)
        values, labels = values[perm], labels[perm]

        driver = values[:, 0]  # always observed; drives the MAR mechanism
        mask = np.zeros_like(values, dtype=bool)
        for c in masked_cols:
            p = np.where(driver > np.median(driver), 0.35, 0.05)
            mask[:, c] = rng.random(n) < p
        return values, mask, labels

    @staticmethod
    def to_dataset(values, mask):
        cols = []
        for j in range(values.shape[1]):
            vals = [None if mask[i, j] else float(values[i, j])
                    for i in range(values.shape[0])]
            cols.append(Column.of(f"f{j}", "numeric", vals))
        return Dataset.of("qc", cols)

    @staticmethod
    def detector_flags(values, rate, seed):
        fm = FeatureMatrix.of(values)
        model = fit_isolation_forest(fm, trees=100, subsample=256, seed=seed)
        scores = score(model, fm)
        return (scores >= calibrate_threshold(scores, "contamination",
                                              rate=rate)).astype(int)

    def run_seed(self, seed):
        values, mask, labels = self.qc_frame(seed)
        rate = float(labels.mean())

        complete = ~mask.any(axis=1)
        y_base = np.ones(len(labels), dtype=int)  # null rows are unvalidatable
        y_base[complete] = self.detector_flags(values[complete], rate, seed)
        base = evaluate(labels.tolist(), y_base.tolist())

        imputed, _ = impute_dataset(self.to_dataset(values, mask),
                                    method="mice", seed=seed)
        full = np.column_stack([[float(v) for v in imputed.column(n).values]
                                for n in imputed.numeric_columns()])
        aware = evaluate(labels.tolist(),
                         self.detector_flags(full, rate, seed).tolist())
        return base, aware

    def test_gain_margins_hold_across_seeds(self):
        started = time.perf_counter()
        wins = 0
        outcomes = []
        for seed in range(10):
            base, aware = self.run_seed(seed)
            f1_gain_ok = aware.per_class[1].f1 >= 1.30 * base.per_class[1].f1
            fpr_cut_ok = base.false_positive_rate >= 2.0 * aware.false_positive_rate
            wins += f1_gain_ok and fpr_cut_ok
            outcomes.append((seed, base.per_class[1].f1, aware.per_class[1].f1,
                             base.false_positive_rate, aware.false_positive_rate))
        assert wins >= 9, outcomes
        assert time.perf_counter() - started < 120.0


class TestMatrixCompletion:
    def test_softimpute_rank_one_recovery(self):
        truth, holed, mask = test_impute.TestSoftImpute.rank_one_fixture()
        assert holed.shape == (8, 6)
        assert int(mask.sum()) == 14  # 30% of 48 cells
        completed, _ = impute_softimpute(holed, lam=0.002, max_rank=2,
                                         tol=1e-12, max_iter=8000)
        rmse = float(np.sqrt(np.mean((completed[mask] - truth[mask]) ** 2)))
        assert rmse <= 1e-3

    def test_mice_recovers_exact_linear_relation(self):
        ds, truth, holes = test_impute.TestImputeMice.linear_fixture()
        out, _ = impute_mice(ds)
        for i in holes:
            assert out.column("x").values[i] == pytest.approx(truth[i], abs=1e-6)


@pytest.fixture(scope="module")
def eight_source_runs(tmp_path_factory):
    """One sequential and one 4-worker run over the same 8 sources."""
    root = tmp_path_factory.mktemp("runner_perf")
    frame = bond_frame(rows=40, numeric_cols=8)
    sources = write_sources(root, frame, [f"s{i}" for i in range(8)])

    def config_at(name, workers):
        return parse_config({"spec": "corporate_bonds", "sources": sources,
                             "workers": workers,
                             "output": out_block(root / name)})

    seq = config_at("seq", 1)
    started = time.perf_counter()
    run_pipeline(seq, DATE, now=FROZEN_NOW, workers=1)
    t_seq = time.perf_counter() - started

    par = config_at("par", 4)
    started = time.perf_counter()
    run_pipeline(par, DATE, now=FROZEN_NOW, workers=4)
    t_par = time.perf_counter() - started
    return {"root": root, "sources": sources, "seq": seq, "par": par,
            "t_seq": t_seq, "t_par": t_par}


class TestRunnerPerformance:
    def test_parallel_artifacts_byte_identical(self, eight_source_runs):
        runs = eight_source_runs
        seq_status = Path(runs["seq"].output["status_file"]).read_text()
        par_status = Path(runs["par"].output["status_file"]).read_text()
        assert seq_status == par_status
        assert len(seq_status.splitlines()) == 41  # 8 sources x 5 checks
        seq_report = (Path(runs["seq"].output["report_dir"]) /
                      f"{RUN_ID}_breach_report.html").read_text()
        par_report = (Path(runs["par"].output["report_dir"]) /
                      f"{RUN_ID}_breach_report.html").read_text()
        root = runs["root"]
        assert seq_report.replace(str(root / "seq"), "OUT") == \
            par_report.replace(str(root / "par"), "OUT")

    @pytest.mark.xfail(condition=CORES < 4, strict=False,
                       reason="speedup needs at least 4 CPU cores")
    def test_four_workers_reach_2_5x_speedup(self, eight_source_runs):
        runs = eight_source_runs
        assert runs["t_seq"] / runs["t_par"] >= 2.5, \
            f"seq {runs['t_seq']:.2f}s vs par {runs['t_par']:.2f}s on {CORES} cores"

    def test_crash_after_third_source_then_resume(self, eight_source_runs):
        runs = eight_source_runs
        config = parse_config({"spec": "corporate_bonds",
                               "sources": runs["sources"],
                               "output": out_block(runs["root"] / "crashed")})
        with pytest.raises(RuntimeError, match="crash after 3 sources"):
            run_pipeline(config, DATE, now=FROZEN_NOW, fail_after_source=3)

        exec_dir = Path(config.output["report_dir"]) / RUN_ID / "exec"
        before = {p.stem: p.read_text() for p in exec_dir.glob("*.token")}
        assert len(before) == 3

        started = time.perf_counter()
        record = checkpoint_resume(RUN_ID, config, now=FROZEN_NOW)
        t_resume = time.perf_counter() - started

        after = {p.stem: p.read_text() for p in exec_dir.glob("*.token")}
        assert len(after) == 8
        for sid, token in before.items():  # completed sources not re-executed
            assert after[sid] == token

        assert Path(config.output["status_file"]).read_text() == \
            Path(runs["seq"].output["status_file"]).read_text()
        resumed_report = Path(record["report_path"]).read_text()
        baseline_report = (Path(runs["seq"].output["report_dir"]) /
                           f"{RUN_ID}_breach_report.html").read_text()
        assert resumed_report.replace(str(runs["root"] / "crashed"), "OUT") == \
            baseline_report.replace(str(runs["root"] / "seq"), "OUT")

        # overhead beyond re-running the five outstanding sources
        overhead = t_resume - runs["t_seq"] * (5 / 8)
        assert overhead < 5.0, f"resume {t_resume:.2f}s vs full {runs['t_seq']:.2f}s"


class TestGateStateMachine:
    """Randomized event sequences against the ledger: the gate verdict must
    equal (an open red breach exists), re-acknowledgment must be idempotent,
    and the audit trail append-only."""

    def test_ten_thousand_random_sequences(self):
        for seed in range(10_000):
            drive_gate_machine(seed, steps=6 + seed % 7)
