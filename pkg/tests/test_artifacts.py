import dataclasses
import hashlib
import json

import pytest

from maad.artifacts import (
    AdrCategory,
    ArchitecturalDecisionRecord,
    AsrTag,
    ClarificationExchange,
    ClarificationStatus,
    ComponentRelation,
    ComponentRelationKind,
    DesignPackage,
    Message,
    MessageStyle,
    PackageVerdict,
    QualityAttribute,
    QualityAttributePriority,
    Requirement,
    RequirementKind,
    RiskFlag,
    RiskKind,
    RiskResolution,
    TraceabilityLink,
    ViolationKind,
    canonical_package_dict,
    canonicalize,
    element_path_exists,
    package_digest,
    parse_package,
    validate_package,
)
from maad.common import InvalidPackage

from conftest import build_sample_package
from oracles import independent_canonical_bytes, walk_references


def minimal_package() -> DesignPackage:
    return DesignPackage(
        requirement_set=(Requirement("R-001", "log in", RequirementKind.FUNCTIONAL, (0, 6)),),
    )


class TestValidatePackage:
    def test_minimal_package_is_clean(self):
        assert validate_package(minimal_package()) == []

    def test_dangling_adr_address(self):
        pkg = dataclasses.replace(
            minimal_package(),
            adrs=(
                ArchitecturalDecisionRecord(
                    "ADR-001", AdrCategory.STYLE, "t", "c", "d", (), "q", addresses=("R-99",)
                ),
            ),
        )
        violations = validate_package(pkg)
        assert len(violations) == 1
        assert violations[0].kind is ViolationKind.DANGLING_REFERENCE
        assert violations[0].path == "adrs[0].addresses[0]"

    def test_sample_package_matches_reference_walker(self, sample_package):
        assert validate_package(sample_package) == []
        assert walk_references(sample_package.to_dict()) == []

    def test_functional_requirement_with_attributes(self):
        pkg = DesignPackage(
            requirement_set=(
                Requirement("R-001", "x", RequirementKind.FUNCTIONAL, (0, 1), attributes=(QualityAttribute.SECURITY,)),
            )
        )
        kinds = {v.kind for v in validate_package(pkg)}
        assert kinds == {ViolationKind.INVALID_FIELD}

    def test_duplicate_requirement_id(self):
        pkg = DesignPackage(
            requirement_set=(
                Requirement("R-001", "a", RequirementKind.FUNCTIONAL, (0, 1)),
                Requirement("R-001", "b", RequirementKind.FUNCTIONAL, (0, 1)),
            )
        )
        violations = validate_package(pkg)
        assert [v.kind for v in violations] == [ViolationKind.DUPLICATE_ID]
        assert violations[0].path == "requirement_set[1].id"

    def test_span_bounds(self):
        bad = DesignPackage(requirement_set=(Requirement("R-001", "a", RequirementKind.FUNCTIONAL, (5, 2)),))
        assert any(v.path.endswith("source_span") for v in validate_package(bad))
        long = DesignPackage(requirement_set=(Requirement("R-001", "a", RequirementKind.FUNCTIONAL, (0, 50)),))
        assert validate_package(long) == []
        assert len(validate_package(long, srs_length=10)) == 1

    def test_assumed_risk_requires_assumption(self, sample_package):
        risk = RiskFlag("RISK-002", RiskKind.CONFLICT, ("R-001",), "d", RiskResolution.ASSUMED, None)
        pkg = dataclasses.replace(sample_package, risk_flags=sample_package.risk_flags + (risk,))
        assert any(v.path == "risk_flags[1].assumption" for v in validate_package(pkg))

    def test_clarification_status_answer_coherence(self, sample_package):
        bad = ClarificationExchange("Q-002", "RISK-001", "why?", None, ClarificationStatus.ANSWERED)
        pkg = dataclasses.replace(sample_package, clarifications=sample_package.clarifications + (bad,))
        assert any(v.path == "clarifications[1].status" for v in validate_package(pkg))

    def test_qa_rank_permutation(self, sample_package):
        extra = QualityAttributePriority(QualityAttribute.SECURITY, 3, "s")
        pkg = dataclasses.replace(sample_package, qa_priorities=sample_package.qa_priorities + (extra,))
        assert any(v.path == "qa_priorities" for v in validate_package(pkg))

    def test_contains_self_loop(self, sample_package):
        loop = ComponentRelation("cmp-shop", "cmp-shop", ComponentRelationKind.CONTAINS)
        pkg = dataclasses.replace(
            sample_package,
            logical_view=dataclasses.replace(
                sample_package.logical_view, relations=sample_package.logical_view.relations + (loop,)
            ),
        )
        assert any("cannot contain itself" in v.message for v in validate_package(pkg))

    def test_sequence_index_must_be_gap_free(self, sample_package):
        seq = sample_package.sequence_models[0]
        bad = dataclasses.replace(
            seq, messages=(seq.messages[0], dataclasses.replace(seq.messages[1], seq_index=5))
        )
        pkg = dataclasses.replace(sample_package, sequence_models=(bad,))
        assert any("seq_index" in v.path for v in validate_package(pkg))

    def test_message_endpoint_must_be_declared(self, sample_package):
        seq = sample_package.sequence_models[0]
        bad = dataclasses.replace(
            seq, messages=seq.messages + (Message(3, "Ghost", "Shop", "boo", MessageStyle.SYNC),)
        )
        pkg = dataclasses.replace(sample_package, sequence_models=(bad,))
        assert any(v.kind is ViolationKind.DANGLING_REFERENCE for v in validate_package(pkg))

    def test_unresolved_traceability_path(self, sample_package):
        pkg = dataclasses.replace(
            sample_package,
            traceability_links=sample_package.traceability_links + (TraceabilityLink("R-001", "adrs/ADR-404"),),
        )
        violations = validate_package(pkg)
        assert [v.path for v in violations] == ["traceability_links[2].element_path"]

    def test_confirmed_needs_sequence_models(self):
        pkg = dataclasses.replace(minimal_package(), verdict=PackageVerdict.CONFIRMED)
        assert any(v.path == "sequence_models" for v in validate_package(pkg))

    def test_violations_come_in_document_order(self, sample_package):
        pkg = dataclasses.replace(
            sample_package,
            asr_tags=sample_package.asr_tags + (AsrTag("R-404", "r", 9),),
            adrs=(dataclasses.replace(sample_package.adrs[0], addresses=("R-405",)),),
        )
        paths = [v.path for v in validate_package(pkg)]
        assert paths == ["asr_tags[1].requirement_id", "asr_tags[1].criticality", "adrs[0].addresses[0]"]

    def test_mutated_packages_agree_with_reference_walker(self, sample_package):
        mutants = [
            dataclasses.replace(sample_package, asr_tags=(AsrTag("R-404", "x", 2),)),
            dataclasses.replace(
                sample_package, traceability_links=(TraceabilityLink("R-404", "adrs/ADR-001"),)
            ),
            dataclasses.replace(
                sample_package,
                physical_view=dataclasses.replace(
                    sample_package.physical_view,
                    allocations=sample_package.physical_view.allocations[:1]
                    + (dataclasses.replace(sample_package.physical_view.allocations[1], node_id="node-404"),),
                ),
            ),
        ]
        for mutant in mutants:
            ours = validate_package(mutant)
            theirs = walk_references(mutant.to_dict())
            assert ours, "library validator missed a corruption the oracle would flag"
            assert theirs, "oracle disagrees: no problem found"


class TestElementPaths:
    def test_resolution(self, sample_package):
        good = [
            "adrs/ADR-001",
            "logical_view/components/cmp-shop",
            "physical_view/nodes/node-1",
            "class_model/classes/Item",
            "sequence_models/0",
            "sequence_models/0/participants/User",
            "sequence_models/0/messages/2",
            "deployment_model/nodes/MainNode",
            "deployment_model/artifacts/ShopApp",
            "qa_priorities/reliability",
        ]
        for path in good:
            assert element_path_exists(sample_package, path), path
        bad = [
            "adrs/ADR-404",
            "sequence_models/3",
            "class_model/classes/Nope",
            "unknown_root/x",
            "",
            "sequence_models/0/messages/9",
        ]
        for path in bad:
            assert not element_path_exists(sample_package, path), path


class TestCanonicalize:
    def test_construction_order_does_not_matter(self, sample_package):
        shuffled = dataclasses.replace(
            sample_package,
            requirement_set=tuple(reversed(sample_package.requirement_set)),
            traceability_links=tuple(reversed(sample_package.traceability_links)),
            physical_view=dataclasses.replace(
                sample_package.physical_view,
                allocations=tuple(reversed(sample_package.physical_view.allocations)),
            ),
        )
        assert canonicalize(shuffled) == canonicalize(sample_package)

    def test_idempotent_through_parse(self, sample_package):
        first = canonicalize(sample_package)
        again = canonicalize(parse_package(first))
        assert first == again

    def test_rejects_invalid_package(self):
        pkg = dataclasses.replace(
            minimal_package(),
            adrs=(ArchitecturalDecisionRecord("ADR-001", AdrCategory.STYLE, "t", "c", "d", (), "q", ("R-99",)),),
        )
        with pytest.raises(InvalidPackage):
            canonicalize(pkg)

    def test_matches_independent_serializer(self, sample_package):
        assert canonicalize(sample_package) == independent_canonical_bytes(sample_package.to_dict())

    def test_digest_is_sha256_of_canonical_bytes(self, sample_package):
        assert package_digest(sample_package) == hashlib.sha256(canonicalize(sample_package)).hexdigest()

    def test_distinct_packages_have_distinct_bytes(self, sample_package):
        other = dataclasses.replace(sample_package, round_count=7)
        assert canonicalize(other) != canonicalize(sample_package)

    def test_interleaved_deployment_normalizes_and_stays_idempotent(self, sample_package):
        dm = sample_package.deployment_model
        two_node = dataclasses.replace(
            dm,
            nodes=("MainNode", "EdgeNode"),
            placements=(dm.placements[0], dataclasses.replace(dm.placements[1], node="EdgeNode")),
        )
        interleaved = dataclasses.replace(
            two_node, artifacts=tuple(reversed(two_node.artifacts)), placements=tuple(reversed(two_node.placements))
        )
        a = canonicalize(dataclasses.replace(sample_package, deployment_model=two_node))
        b = canonicalize(dataclasses.replace(sample_package, deployment_model=interleaved))
        assert a == b
        assert canonicalize(parse_package(b)) == b

    def test_canonical_dict_round_trips_by_schema(self, sample_package):
        data = canonical_package_dict(sample_package)
        rebuilt = DesignPackage.from_dict(json.loads(json.dumps(data)))
        assert canonical_package_dict(rebuilt) == data


class TestBookstoreFixturePackage:
    """The bundled fixture package, checked against the independent oracles."""

    @pytest.fixture(scope="class")
    def bookstore(self):
        from pathlib import Path

        from maad.agents import ReplayBackend
        from maad.knowledge import KnowledgeBase
        from maad.orchestrator import SessionConfig, run_to_completion, start_session

        fixture = Path(__file__).parent / "fixtures" / "bookstore"
        session = start_session(
            (fixture / "srs.txt").read_text(),
            SessionConfig(interactive=False),
            backend=ReplayBackend(fixture / "replay"),
            kb=KnowledgeBase.load(fixture / "data" / "kb"),
        )
        run_to_completion(session)
        return fixture, session.package

    def test_reference_walker_finds_nothing(self, bookstore):
        _, package = bookstore
        assert validate_package(package) == []
        assert walk_references(package.to_dict()) == []

    def test_canonical_bytes_match_the_independent_serializer(self, bookstore):
        _, package = bookstore
        assert canonicalize(package) == independent_canonical_bytes(package.to_dict())

    def test_digest_equals_the_pin(self, bookstore):
        fixture, package = bookstore
        pinned = (fixture / "pinned_digest.txt").read_text().strip()
        assert package_digest(package) == pinned

    def test_injective_on_fixture_corpus_variants(self, bookstore):
        _, package = bookstore
        variants = [
            package,
            dataclasses.replace(package, round_count=package.round_count + 1),
            dataclasses.replace(package, traceability_links=package.traceability_links[:-1]),
            dataclasses.replace(package, asr_tags=package.asr_tags[:-1]),
        ]
        blobs = {canonicalize(v) for v in variants}
        assert len(blobs) == len(variants)
        for variant in variants:
            assert canonicalize(parse_package(canonicalize(variant))) == canonicalize(variant)


class TestSchemaParsing:
    def test_unknown_field_rejected(self, sample_package):
        data = sample_package.to_dict()
        data["extra"] = 1
        with pytest.raises(ValueError, match="unexpected fields"):
            DesignPackage.from_dict(data)

    def test_missing_field_rejected(self, sample_package):
        data = sample_package.to_dict()
        del data["verdict"]
        with pytest.raises(ValueError, match="missing required fields"):
            DesignPackage.from_dict(data)

    def test_bad_enum_value_names_path(self):
        with pytest.raises(ValueError, match=r"requirement\.kind"):
            Requirement.from_dict({"id": "R-1", "text": "x", "kind": "weird", "source_span": [0, 1]})

    def test_round_trip_preserves_everything(self, sample_package):
        rebuilt = DesignPackage.from_dict(sample_package.to_dict())
        assert rebuilt == sample_package
