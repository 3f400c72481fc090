import pytest

from maad.artifacts import (
    AdrCategory,
    Allocation,
    ArchitecturalDecisionRecord,
    ArtifactPlacement,
    AsrTag,
    ClarificationExchange,
    ClarificationStatus,
    ClassAttribute,
    ClassModel,
    ClassRelation,
    ClassRelationKind,
    Component,
    ComponentRelation,
    ComponentRelationKind,
    DeploymentArtifact,
    DeploymentModel,
    DesignPackage,
    LogicalView,
    Message,
    MessageStyle,
    NodeKind,
    Participant,
    ParticipantKind,
    PhysicalNode,
    PhysicalView,
    QualityAttribute,
    QualityAttributePriority,
    Requirement,
    RequirementKind,
    RiskFlag,
    RiskKind,
    RiskResolution,
    SequenceModel,
    TraceabilityLink,
    UmlClass,
)


def build_sample_package() -> DesignPackage:
    """A small, fully consistent package used across the unit suites."""
    return DesignPackage(
        requirement_set=(
            Requirement("R-001", "Customers browse the catalog.", RequirementKind.FUNCTIONAL, (0, 30)),
            Requirement(
                "R-002",
                "The shop stays available around the clock.",
                RequirementKind.NON_FUNCTIONAL,
                (31, 73),
                attributes=(QualityAttribute.RELIABILITY,),
            ),
        ),
        asr_tags=(AsrTag("R-002", "availability constrains the topology", 3),),
        risk_flags=(
            RiskFlag(
                "RISK-001",
                RiskKind.AMBIGUITY,
                ("R-001",),
                "catalog size is unspecified",
                RiskResolution.ASSUMED,
                "assume a catalog below one million entries",
            ),
        ),
        clarifications=(
            ClarificationExchange(
                "Q-001", "RISK-001", "Is the catalog bounded?", "Yes, under a million.", ClarificationStatus.ANSWERED
            ),
        ),
        qa_priorities=(QualityAttributePriority(QualityAttribute.RELIABILITY, 1, "stays up during node loss"),),
        adrs=(
            ArchitecturalDecisionRecord(
                "ADR-001",
                category=AdrCategory.STYLE,
                title="Replicated service tier",
                context="availability requirement",
                decision="run two replicas behind a balancer",
                alternatives=("single node",),
                consequences="higher cost, no single point of failure",
                addresses=("R-002",),
            ),
        ),
        logical_view=LogicalView(
            components=(
                Component("cmp-shop", "Shop", "storefront features", "sales"),
                Component("cmp-stock", "Stock", "inventory features", "logistics"),
            ),
            relations=(ComponentRelation("cmp-shop", "cmp-stock", ComponentRelationKind.USES),),
        ),
        physical_view=PhysicalView(
            nodes=(PhysicalNode("node-1", "Primary", NodeKind.SERVER),),
            allocations=(Allocation("cmp-shop", "node-1"), Allocation("cmp-stock", "node-1")),
            links=(),
        ),
        class_model=ClassModel(
            classes=(
                UmlClass(
                    "Shop",
                    attributes=(ClassAttribute("id", "String"),),
                    methods=("find(query: String): Item",),
                ),
                UmlClass("Item"),
            ),
            relations=(ClassRelation("Shop", "Item", ClassRelationKind.AGGREGATES),),
        ),
        sequence_models=(
            SequenceModel(
                participants=(Participant("User", ParticipantKind.ACTOR), Participant("Shop", ParticipantKind.OBJECT)),
                messages=(
                    Message(1, "User", "Shop", "find(query)", MessageStyle.SYNC),
                    Message(2, "Shop", "User", "items", MessageStyle.REPLY),
                ),
            ),
        ),
        deployment_model=DeploymentModel(
            nodes=("MainNode",),
            artifacts=(DeploymentArtifact("ShopApp", "cmp-shop"), DeploymentArtifact("StockApp", "cmp-stock")),
            placements=(ArtifactPlacement("ShopApp", "MainNode"), ArtifactPlacement("StockApp", "MainNode")),
            paths=(),
        ),
        traceability_links=(
            TraceabilityLink("R-001", "class_model/classes/Shop"),
            TraceabilityLink("R-002", "adrs/ADR-001"),
        ),
    )


@pytest.fixture
def sample_package() -> DesignPackage:
    return build_sample_package()
