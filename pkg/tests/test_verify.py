import json

import numpy as np
import pytest

from levychaos.errors import DomainError
from levychaos.expansion import expand_product
from levychaos.kernelspace import random_kernel
from levychaos.verify import (VerificationConfig, product_pathwise_report,
                              verify_exponential, verify_isometry,
                              verify_pair_vs_general, verify_product_pathwise)

BASE_DOC = {
    "schema": 1,
    "space": {"horizon": 1.0, "cells": 4,
              "marks": [{"size": 1.0, "rate": 2.5}, {"size": -0.5, "rate": 1.5}]},
    "degrees": [1, 1],
    "kernels": [{"random": {"seed": 1, "scale": 1.0}},
                {"random": {"seed": 2, "scale": 1.0}}],
    "paths": 25,
    "samples": 20_000,
    "seed": 7,
}


class TestConfig:
    def test_from_dict(self):
        cfg = VerificationConfig.from_dict(BASE_DOC)
        assert cfg.space.npoints == 8
        assert cfg.degrees == (1, 1)
        assert len(cfg.kernels) == 2
        assert cfg.rel_tol == 1e-9

    def test_schema_rejects_with_pointer(self):
        doc = dict(BASE_DOC)
        doc["paths"] = -3
        with pytest.raises(DomainError, match="paths"):
            VerificationConfig.from_dict(doc)

    def test_missing_schema_field(self):
        doc = {k: v for k, v in BASE_DOC.items() if k != "schema"}
        with pytest.raises(DomainError):
            VerificationConfig.from_dict(doc)

    def test_kernels_degrees_mismatch(self):
        doc = dict(BASE_DOC)
        doc["kernels"] = doc["kernels"][:1]
        with pytest.raises(DomainError):
            VerificationConfig.from_dict(doc)

    def test_from_file(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(json.dumps(BASE_DOC))
        cfg = VerificationConfig.from_file(str(p))
        assert cfg.paths == 25

    def test_from_file_bad_json(self, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text("{nope")
        with pytest.raises(DomainError):
            VerificationConfig.from_file(str(p))

    def test_rho_with_norm(self):
        doc = dict(BASE_DOC)
        doc["rho"] = {"random": {"seed": 3, "scale": 0.1}, "norm": 0.4}
        cfg = VerificationConfig.from_dict(doc)
        from levychaos.kernelspace import norm
        assert norm(cfg.rho) == pytest.approx(0.4)


class TestProductPathwise:
    def test_all_paths_pass(self):
        cfg = VerificationConfig.from_dict(BASE_DOC)
        report = verify_product_pathwise(cfg)
        assert report.total == cfg.paths
        assert report.failed == 0
        assert report.skipped == 0

    def test_deterministic(self):
        cfg = VerificationConfig.from_dict(BASE_DOC)
        r1 = verify_product_pathwise(cfg)
        r2 = verify_product_pathwise(cfg)
        assert r1.to_json_lines() == r2.to_json_lines()

    def test_corrupted_coefficient_fails(self):
        cfg = VerificationConfig.from_dict(BASE_DOC)
        expansion = expand_product(list(cfg.kernels))
        expansion.terms[1].coefficient += 1
        report = product_pathwise_report(cfg.kernels, expansion, cfg.paths,
                                         cfg.seed, cfg.rel_tol, cfg.tuple_guard)
        assert report.failed > 0

    def test_corrupted_kernel_entry_fails(self):
        cfg = VerificationConfig.from_dict(BASE_DOC)
        expansion = expand_product(list(cfg.kernels))
        vals = expansion.terms[0].kernel.values.copy()
        vals[0, 0] += 1e-3
        expansion.terms[0].kernel.values = vals
        report = product_pathwise_report(cfg.kernels, expansion, cfg.paths,
                                         cfg.seed, cfg.rel_tol, cfg.tuple_guard)
        assert report.failed > 0

    def test_guard_trips_become_skips(self):
        doc = dict(BASE_DOC)
        doc["tuple_guard"] = 1.0
        cfg = VerificationConfig.from_dict(doc)
        report = verify_product_pathwise(cfg)
        assert report.skipped > 0
        # skipped records never count toward the pass total
        assert report.total == cfg.paths - report.skipped

    def test_zero_factor(self):
        doc = dict(BASE_DOC)
        doc["degrees"] = [1, 1, 1]
        doc["kernels"] = [{"random": {"seed": 1}}, {"random": {"seed": 2}},
                          {"values": [0.0] * 8, "degree": 1}]
        cfg = VerificationConfig.from_dict(doc)
        report = verify_product_pathwise(cfg)
        assert report.failed == 0
        for r in report.records:
            assert r.lhs == 0.0 and r.rhs == 0.0

    def test_needs_kernels(self):
        doc = {k: v for k, v in BASE_DOC.items() if k not in ("degrees", "kernels")}
        cfg = VerificationConfig.from_dict(doc)
        with pytest.raises(DomainError):
            verify_product_pathwise(cfg)


class TestPairVsGeneral:
    def test_default_grid_of_degrees(self):
        cfg = VerificationConfig.from_dict({k: v for k, v in BASE_DOC.items()
                                            if k not in ("degrees", "kernels")})
        report = verify_pair_vs_general(cfg, degree_pairs=[(0, 3), (2, 2), (3, 2)])
        assert report.failed == 0
        assert report.total > 0

    def test_term_counts(self):
        cfg = VerificationConfig.from_dict(BASE_DOC)
        report = verify_pair_vs_general(cfg, degree_pairs=[(2, 2)])
        assert report.total == 6


class TestIsometry:
    def test_suite_passes(self):
        cfg = VerificationConfig.from_dict(BASE_DOC)
        report = verify_isometry(cfg)
        assert report.failed == 0
        names = [r.name for r in report.records]
        assert len(names) == 6  # 3 means + 2 second moments + 1 cross


class TestExponential:
    def test_suite_passes(self):
        doc = dict(BASE_DOC)
        doc["space"] = {"horizon": 1.0, "cells": 2, "degree_cap": 8,
                        "marks": doc["space"]["marks"]}
        doc["rho"] = {"random": {"seed": 3, "scale": 0.1}, "norm": 0.4}
        doc["paths"] = 200
        doc["samples"] = 20_000
        doc["truncation_order"] = 8
        doc["rms_bound"] = 1e-4
        doc["tuple_guard"] = 1e9
        cfg = VerificationConfig.from_dict(doc)
        report = verify_exponential(cfg)
        assert report.failed == 0

    def test_needs_rho(self):
        cfg = VerificationConfig.from_dict(BASE_DOC)
        with pytest.raises(DomainError):
            verify_exponential(cfg)


class TestReportFormat:
    def test_json_lines(self):
        cfg = VerificationConfig.from_dict(BASE_DOC)
        report = verify_product_pathwise(cfg)
        lines = report.to_json_lines().splitlines()
        records = [json.loads(line) for line in lines]
        assert all(isinstance(r, dict) for r in records)
        assert "summary" in records[-1]
        assert records[-1]["summary"]["pass"] is True
