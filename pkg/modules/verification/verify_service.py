"""
verify_service.py
-----------------
Runs the invariant suite against a map document and aggregates the results
into a report.

Interval-map documents get leg exactness, block fixed points, cylinder
diameters, cylinder-vs-brute cover checks at tiny scale, symbolic-vs-numeric
stage agreement and a provenance rebuild. Cube documents get the slab law,
leg corners, cube cylinder diameters, stage agreement and corner fixed points.

Usage:
    from modules.verification import VerificationService
    report = VerificationService().verify_document(doc)
"""

from collections import Counter
from typing import Any, Dict, List, Mapping

from modules.builders import build_map
from modules.cubes import make_nested_cube_map
from modules.exceptions import MeanDimError
from modules.logging_config import logger
from modules.maps1d import PAMap
from modules.verification import checks
from modules.verification.models import CheckRecord, CheckStatus


class VerificationService:

    def verify_document(self, doc: Mapping[str, Any]) -> Dict[str, Any]:
        """
        Dispatch on the document kind and run every applicable check.

        Returns:
            dict with keys status ("pass" | "fail"), counts, checks
        """
        if "m" in doc and "rule" in doc:
            records = self.verify_cube_document(doc)
        else:
            records = self.verify_map(PAMap.from_document(doc), doc)
        return self._aggregate(records)

    def verify_map(self, phi: PAMap, doc: Mapping[str, Any] = None) -> List[CheckRecord]:
        records: List[CheckRecord] = []
        logger.info(f"[Verify] interval map: {phi.node_count} nodes, {len(phi.blocks)} declared blocks")

        rebuilt = None
        if doc and doc.get("construction") and doc.get("construction") not in ("compose_power", "splice"):
            try:
                rebuilt = build_map({"construction": doc["construction"], "parameters": doc.get("parameters") or {}})
            except MeanDimError as e:
                logger.warning(f"[Verify] could not rebuild from header: {e.detail}")
        records.extend(checks.check_provenance(phi, rebuilt))
        records.extend(checks.check_leg_exactness(phi))
        records.extend(checks.check_blocks_fixed(phi))

        # structural failures make the metric checks meaningless
        if any(r.status == CheckStatus.FAIL for r in records if r.name != "provenance"):
            logger.warning("[Verify] structural checks failed, skipping metric checks")
            return records

        records.extend(checks.check_cylinder_diameters(phi))
        records.extend(checks.check_cover_optimality(phi))
        records.extend(checks.check_stage_agreement(phi))
        return records

    def verify_cube_document(self, doc: Mapping[str, Any]) -> List[CheckRecord]:
        cube = make_nested_cube_map(int(doc["m"]), doc["rule"], doc["B"], int(doc["K"]), doc.get("r"))
        logger.info(f"[Verify] cube map m={cube.m}, {cube.schedule.K} blocks")
        records: List[CheckRecord] = list(checks.check_assignment(cube, doc.get("blocks")))
        for block in cube.blocks():
            records.extend(checks.check_slab_law(block))
            records.extend(checks.check_leg_corners(block))
            records.extend(checks.check_corner_fixed_points(block))
            records.extend(checks.check_cube_cylinders(block))
        return records

    # -----------------------------------------------------------------------
    # Internal
    # -----------------------------------------------------------------------

    def _aggregate(self, records: List[CheckRecord]) -> Dict[str, Any]:
        counts: Counter = Counter(r.status.value for r in records)
        ordered = sorted(records, key=lambda r: (r.status.sort_order, r._key))
        status = "fail" if counts.get("fail") else "pass"
        logger.info(
            f"[Verify] {counts.get('pass', 0)} passed, {counts.get('fail', 0)} failed, "
            f"{counts.get('skip', 0)} skipped"
        )
        return {
            "status": status,
            "passed": counts.get("pass", 0),
            "failed": counts.get("fail", 0),
            "skipped": counts.get("skip", 0),
            "checks": [r.to_dict() for r in ordered],
        }
