# tests/test_verification.py
"""
Unit tests for modules/verification/

Coverage:
  - CheckRecord / CheckStatus         — labels, ordering keys, dicts
  - checks.*                          — individual invariant checks
  - VerificationService               — interval and cube documents, aggregation

Run with:
    pytest tests/test_verification.py -v
"""

import os
import sys
from fractions import Fraction

import pytest

_PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if _PROJECT_ROOT not in sys.path:
    sys.path.insert(0, _PROJECT_ROOT)

from modules.cubes import make_cube_block, make_nested_cube_map
from modules.maps1d import PAMap, make_phi_sr, make_tent_g
from modules.verification import CheckRecord, CheckStatus, VerificationService
from modules.verification import checks

F = Fraction


def _broken_tent_document():
    doc = make_tent_g().to_document()
    doc["values"] = ["0", "1", "1/2", "1"]
    return doc


# ═══════════════════════════════════════════════════════════════════════════════
# Models
# ═══════════════════════════════════════════════════════════════════════════════

class TestModels:

    def test_labels(self):
        assert CheckStatus.PASS.label == "Passed"
        assert CheckStatus.SKIP.label == "Skipped"

    def test_failures_sort_first(self):
        assert CheckStatus.FAIL.sort_order < CheckStatus.PASS.sort_order < CheckStatus.SKIP.sort_order

    def test_record_dict(self):
        record = CheckRecord(name="leg_exactness", status=CheckStatus.FAIL, subject="block 0", detail="bent")
        assert record.to_dict() == {
            "check": "leg_exactness", "subject": "block 0", "status": "fail",
            "label": "Failed", "detail": "bent", "value": None,
        }
        assert record._key == "leg_exactness||block 0"


# ═══════════════════════════════════════════════════════════════════════════════
# Interval checks
# ═══════════════════════════════════════════════════════════════════════════════

class TestIntervalChecks:

    def test_leg_exactness_flags_broken_leg(self):
        records = checks.check_leg_exactness(PAMap.from_document(_broken_tent_document()))
        assert [r.status for r in records] == [CheckStatus.FAIL]
        assert "expected 0" in records[0].detail

    def test_blocks_fixed(self):
        records = checks.check_blocks_fixed(make_phi_sr(1, 1, 3))
        assert len(records) == 3
        assert all(r.status == CheckStatus.PASS for r in records)

    def test_cylinder_diameters(self):
        records = checks.check_cylinder_diameters(make_phi_sr(1, 1, 2))
        assert len(records) == 4
        assert all(r.status == CheckStatus.PASS for r in records)

    def test_cover_optimality_window(self):
        records = checks.check_cover_optimality(make_tent_g())
        assert [r.status for r in records] == [CheckStatus.PASS, CheckStatus.PASS]
        assert all(r.value is not None for r in records)

    def test_stage_agreement(self):
        records = checks.check_stage_agreement(make_phi_sr(1, 1, 2))
        assert len(records) == 6
        assert all(r.status == CheckStatus.PASS for r in records)

    def test_provenance_without_header(self):
        records = checks.check_provenance(make_tent_g(), None)
        assert records[0].status == CheckStatus.SKIP


# ═══════════════════════════════════════════════════════════════════════════════
# Cube checks
# ═══════════════════════════════════════════════════════════════════════════════

class TestCubeChecks:

    def test_slab_law(self):
        assert checks.check_slab_law(make_cube_block(2, 4, (0, 1)))[0].status == CheckStatus.PASS

    def test_leg_corners(self):
        assert checks.check_leg_corners(make_cube_block(3, 1, (0, 1)))[0].status == CheckStatus.PASS

    def test_corner_fixed_points(self):
        assert checks.check_corner_fixed_points(make_cube_block(2, 1, (0, 1)))[0].status == CheckStatus.PASS

    def test_inflated_corners_skipped(self):
        block = make_cube_block(2, 1, (0, 1), inflation="1/10")
        assert checks.check_corner_fixed_points(block)[0].status == CheckStatus.SKIP

    def test_cube_cylinders(self):
        records = checks.check_cube_cylinders(make_cube_block(2, 1, (0, 1)))
        assert [(r.name, r.status) for r in records] == [
            ("cylinder_count", CheckStatus.PASS),
            ("cylinder_diameters", CheckStatus.PASS),
            ("stage_agreement", CheckStatus.PASS),
            ("cylinder_count", CheckStatus.PASS),
            ("cylinder_diameters", CheckStatus.PASS),
            ("stage_agreement", CheckStatus.SKIP),
        ]
        assert "81 index tuples but 27 non-empty cylinders" in records[-1].detail

    def test_cube_cylinders_agree_at_m_minus_one(self):
        records = checks.check_cube_cylinders(make_cube_block(3, 1, (0, 1)), depths=(2,))
        assert [r.status for r in records] == [CheckStatus.PASS] * 3

    def test_assignment_mismatch(self):
        cube = make_nested_cube_map(2, "power", "1/2", 1, r=1)
        declared = cube.to_document()["blocks"]
        declared[0]["leg_assignment"] = [[1], [3], [5]]
        assert checks.check_assignment(cube, declared)[0].status == CheckStatus.FAIL


# ═══════════════════════════════════════════════════════════════════════════════
# Service
# ═══════════════════════════════════════════════════════════════════════════════

class TestVerificationService:

    def test_phi_sr_document_passes(self):
        report = VerificationService().verify_document(make_phi_sr(1, 1, 2).to_document())
        assert report["status"] == "pass"
        assert report["failed"] == 0
        names = {row["check"] for row in report["checks"]}
        assert {"provenance", "leg_exactness", "cylinder_diameters",
                "cover_optimality", "stage_agreement"} <= names

    def test_broken_document_fails_before_metric_checks(self):
        report = VerificationService().verify_document(_broken_tent_document())
        assert report["status"] == "fail"
        assert report["checks"][0]["status"] == "fail"
        names = {row["check"] for row in report["checks"]}
        assert "stage_agreement" not in names

    def test_cube_document_passes(self):
        doc = make_nested_cube_map(2, "power", "1/2", 2, r=1).to_document()
        report = VerificationService().verify_document(doc)
        assert report["status"] == "pass"
        names = {row["check"] for row in report["checks"]}
        assert {"slab_law", "leg_corners", "corner_fixed_points", "leg_assignment", "cylinder_count"} <= names

    def test_counts_add_up(self):
        report = VerificationService().verify_document(make_tent_g().to_document())
        assert report["passed"] + report["failed"] + report["skipped"] == len(report["checks"])
