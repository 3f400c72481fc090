#!/usr/bin/env python3
"""Regenerate the online-bookstore fixtures under tests/fixtures/.

Produces the SRS, the knowledge corpus, the canned replay files for the
non-interactive and interactive sessions, and the pinned canonical digest
(recorded here once; the unit suite cross-checks the canonical byte form
against an independent serializer, so the pin is not self-certifying).

Run from the repository root:  python3 tools/make_bookstore_fixtures.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from maad.agents import ReplayBackend  # noqa: E402
from maad.artifacts import package_digest, validate_package  # noqa: E402
from maad.knowledge import KnowledgeBase  # noqa: E402
from maad.orchestrator import SessionConfig, run_to_completion, start_session  # noqa: E402

FIXTURES = REPO / "tests" / "fixtures"

ANSWER_TEXT = "No, discounts arrive in a later release."

SRS_LINES = {
    "FR-1": "FR-1 Catalog browsing: customers shall browse and search the book catalog by title, author, and category.",
    "FR-2": "FR-2 Shopping cart: customers shall collect books in a persistent shopping cart and adjust quantities before checkout.",
    "FR-3": "FR-3 Checkout and payment: the system shall process orders through an external payment gateway and confirm successful payments.",
    "FR-4": "FR-4 Order tracking: customers shall view the status and history of their orders after purchase.",
    "FR-5": "FR-5 Inventory management: staff shall update stock levels, prices, and catalog entries through an administration interface.",
    "FR-6": "FR-6 Accounts: customers shall register, authenticate, and manage profile and address information.",
    "NFR-1": "NFR-1 Availability: the storefront shall remain available 99.9 percent of each calendar month.",
    "NFR-2": "NFR-2 Performance: catalog search results shall be returned within two seconds at the 95th percentile under normal load.",
    "NFR-3": "NFR-3 Security: payment and personal data shall be protected in transit and at rest following industry practice.",
    "NFR-4": "NFR-4 Scalability: the system shall support seasonal traffic of up to ten times the average load without redesign.",
}

SRS = f"""Online Bookstore: Software Requirements Specification

1. Introduction

The system is a web-based online bookstore selling printed and electronic
books to retail customers. It presents a searchable catalog, takes orders,
charges customers through an external payment provider, and keeps staff in
control of stock and pricing.

2. Functional Requirements

{SRS_LINES['FR-1']}
{SRS_LINES['FR-2']}
{SRS_LINES['FR-3']}
{SRS_LINES['FR-4']}
{SRS_LINES['FR-5']}
{SRS_LINES['FR-6']}

3. Non-Functional Requirements

{SRS_LINES['NFR-1']}
{SRS_LINES['NFR-2']}
{SRS_LINES['NFR-3']}
{SRS_LINES['NFR-4']}

4. Constraints and Notes

The bookstore integrates with a third-party payment provider. Promotional
discount rules are described elsewhere and may change quarterly.
"""


def span(key: str) -> list[int]:
    start = SRS.index(SRS_LINES[key])
    return [start, start + len(SRS_LINES[key])]


KB_DOCS = [
    (
        "design_case",
        ["modeler", "designer"],
        "A recovered commerce platform shows a layered shape: a storefront tier in front, "
        "domain services for catalog, cart, ordering, and payment in the middle, and a shared "
        "relational store behind them. Payment providers sit behind a thin adapter so the "
        "charge flow survives provider swaps. Teams that let the cart talk straight to the "
        "database later paid for it in coupling; the service seam is what kept releases cheap.",
    ),
    (
        "literature",
        ["analyst", "modeler"],
        "Quality attribute priorities decide architecture more than feature lists do. "
        "Availability targets above 99.9 percent force replication and health-checked "
        "failover; sub-second interactive latency argues for caching close to the request "
        "path; strict protection of payment data pushes sensitive flows into a narrow, "
        "auditable component. Rank the attributes first, then let every structural decision "
        "cite the ranking it serves.",
    ),
    (
        "expert",
        ["designer", "evaluator"],
        "Practitioners keep deployment diagrams honest by drawing one node per failure "
        "domain and placing every build artifact explicitly. A review that walks each "
        "requirement to the element that serves it catches most gaps before code exists; "
        "the reviews that skip the tracing step ship designs with orphaned requirements.",
    ),
]


REQUIREMENTS = [
    {"id": "R-001", "text": "Customers browse and search the book catalog by title, author, and category.",
     "kind": "functional", "source_span": span("FR-1"), "attributes": [], "status": "active"},
    {"id": "R-002", "text": "Customers collect books in a persistent shopping cart and adjust quantities before checkout.",
     "kind": "functional", "source_span": span("FR-2"), "attributes": [], "status": "active"},
    {"id": "R-003", "text": "Orders are processed through an external payment gateway with confirmed payments.",
     "kind": "functional", "source_span": span("FR-3"), "attributes": [], "status": "active"},
    {"id": "R-004", "text": "Customers view the status and history of their orders after purchase.",
     "kind": "functional", "source_span": span("FR-4"), "attributes": [], "status": "active"},
    {"id": "R-005", "text": "Staff update stock levels, prices, and catalog entries through an administration interface.",
     "kind": "functional", "source_span": span("FR-5"), "attributes": [], "status": "active"},
    {"id": "R-006", "text": "Customers register, authenticate, and manage profile and address information.",
     "kind": "functional", "source_span": span("FR-6"), "attributes": [], "status": "active"},
    {"id": "R-007", "text": "The storefront remains available 99.9 percent of each calendar month.",
     "kind": "non_functional", "source_span": span("NFR-1"), "attributes": ["reliability"], "status": "active"},
    {"id": "R-008", "text": "Catalog search results return within two seconds at the 95th percentile under normal load.",
     "kind": "non_functional", "source_span": span("NFR-2"), "attributes": ["performance_efficiency"], "status": "active"},
    {"id": "R-009", "text": "Payment and personal data are protected in transit and at rest.",
     "kind": "non_functional", "source_span": span("NFR-3"), "attributes": ["security"], "status": "active"},
    {"id": "R-010", "text": "The system supports seasonal traffic of up to ten times the average load.",
     "kind": "non_functional", "source_span": span("NFR-4"), "attributes": ["performance_efficiency"], "status": "active"},
]

ASR_TAGS = [
    {"requirement_id": "R-003", "rationale": "the payment integration shapes the service seam and the security posture", "criticality": 4},
    {"requirement_id": "R-004", "rationale": "order history needs a queryable order lifecycle across components", "criticality": 2},
    {"requirement_id": "R-007", "rationale": "the availability floor forces replication and failover topology", "criticality": 4},
    {"requirement_id": "R-008", "rationale": "the latency percentile drives caching and read-path layout", "criticality": 3},
    {"requirement_id": "R-009", "rationale": "data protection confines sensitive flows to auditable components", "criticality": 4},
]

RISK_OPEN = {
    "id": "RISK-001",
    "kind": "ambiguity",
    "affected_requirement_ids": ["R-003"],
    "description": "Promotional discount rules live outside this document and may change quarterly; "
    "their effect on checkout pricing is unspecified.",
    "resolution": "open",
}

RISK_ASSUMED = dict(
    RISK_OPEN,
    resolution="assumed",
    assumption="Discount rules are out of architectural scope; checkout delegates pricing to a "
    "replaceable policy inside the payments component.",
)

RISK_CLARIFIED = dict(RISK_OPEN, resolution="clarified")

CLARIFICATION_PENDING = {
    "question_id": "Q-001",
    "risk_id": "RISK-001",
    "question": "Are promotional discount rules in scope for the initial architecture?",
    "status": "pending",
}

CLARIFICATION_ANSWERED = dict(CLARIFICATION_PENDING, status="answered", answer=ANSWER_TEXT)


def analyst_output(interactive_round: int | None) -> dict:
    if interactive_round is None:  # non-interactive run
        return {
            "requirements": REQUIREMENTS,
            "asr_tags": ASR_TAGS,
            "risk_flags": [RISK_ASSUMED],
            "clarifications": [],
            "grounding": ["doc-0002:0000"],
        }
    if interactive_round == 0:  # first pass: ask the stakeholder
        return {
            "requirements": REQUIREMENTS,
            "asr_tags": ASR_TAGS,
            "risk_flags": [RISK_OPEN],
            "clarifications": [CLARIFICATION_PENDING],
            "grounding": ["doc-0002:0000"],
        }
    return {  # re-run with the answer folded in
        "requirements": REQUIREMENTS,
        "asr_tags": ASR_TAGS,
        "risk_flags": [RISK_CLARIFIED],
        "clarifications": [CLARIFICATION_ANSWERED],
        "grounding": ["doc-0002:0000"],
    }


MODELER_LINKS = [
    {"requirement_id": "R-001", "element_path": "logical_view/components/cmp-catalog"},
    {"requirement_id": "R-002", "element_path": "logical_view/components/cmp-cart"},
    {"requirement_id": "R-003", "element_path": "adrs/ADR-002"},
    {"requirement_id": "R-005", "element_path": "logical_view/components/cmp-inventory"},
    {"requirement_id": "R-006", "element_path": "logical_view/components/cmp-accounts"},
    {"requirement_id": "R-007", "element_path": "adrs/ADR-003"},
    {"requirement_id": "R-008", "element_path": "adrs/ADR-004"},
    {"requirement_id": "R-009", "element_path": "adrs/ADR-002"},
    {"requirement_id": "R-010", "element_path": "adrs/ADR-004"},
]


def modeler_output(link_r004: bool) -> dict:
    links = list(MODELER_LINKS)
    if link_r004:
        links.append({"requirement_id": "R-004", "element_path": "logical_view/components/cmp-orders"})
    return {
        "qa_priorities": [
            {"attribute": "security", "rank": 1,
             "scenario": "a stolen session token cannot read stored payment data"},
            {"attribute": "reliability", "rank": 2,
             "scenario": "losing one application node keeps checkout available"},
            {"attribute": "performance_efficiency", "rank": 3,
             "scenario": "catalog search answers within two seconds at the 95th percentile"},
        ],
        "adrs": [
            {"id": "ADR-001", "category": "style", "title": "Layered storefront over domain services",
             "context": "a small commerce system with clear sales, fulfillment, and identity domains",
             "decision": "a web storefront tier calls stateless domain services; services own their data access",
             "alternatives": ["single monolithic application", "event-sourced microservices"],
             "consequences": "clear seams for scaling the read path; one more network hop per request",
             "addresses": ["R-001", "R-002", "R-004", "R-006"],
             "grounding": ["doc-0001:0000"]},
            {"id": "ADR-002", "category": "pattern", "title": "Payment gateway behind an adapter",
             "context": "checkout must charge through a third-party provider that can change",
             "decision": "an adapter in the payments component owns every call to the provider",
             "alternatives": ["direct SDK calls from checkout code"],
             "consequences": "provider swaps and audits touch one component; adapter must be kept thin",
             "addresses": ["R-003", "R-009"],
             "grounding": ["doc-0001:0000"]},
            {"id": "ADR-003", "category": "technology", "title": "Replicated relational database",
             "context": "orders and stock need transactional writes and a 99.9 percent availability floor",
             "decision": "one relational database with a synchronous replica and health-checked failover",
             "alternatives": ["single database node", "per-service databases"],
             "consequences": "survives a database node loss; replication adds write latency",
             "addresses": ["R-007"],
             "grounding": ["doc-0002:0000"]},
            {"id": "ADR-004", "category": "technology", "title": "Stateless application tier with cache",
             "context": "search latency and ten-fold seasonal traffic spikes",
             "decision": "application nodes keep no session state and serve catalog reads through a cache",
             "alternatives": ["sticky sessions", "bigger single node"],
             "consequences": "horizontal scaling by adding nodes; cache invalidation becomes a concern",
             "addresses": ["R-008", "R-010"],
             "grounding": ["doc-0002:0000"]},
        ],
        "logical_view": {
            "components": [
                {"id": "cmp-storefront", "name": "Storefront", "responsibility": "web experience for shoppers", "domain": "sales"},
                {"id": "cmp-catalog", "name": "Catalog", "responsibility": "book search and browsing", "domain": "sales"},
                {"id": "cmp-cart", "name": "Cart", "responsibility": "pending purchases per customer", "domain": "sales"},
                {"id": "cmp-orders", "name": "Orders", "responsibility": "order lifecycle and history", "domain": "fulfillment"},
                {"id": "cmp-payments", "name": "Payments", "responsibility": "charging through the external gateway", "domain": "billing"},
                {"id": "cmp-accounts", "name": "Accounts", "responsibility": "registration and authentication", "domain": "identity"},
                {"id": "cmp-inventory", "name": "Inventory", "responsibility": "stock levels and pricing", "domain": "logistics"},
            ],
            "relations": [
                {"from_id": "cmp-storefront", "to_id": "cmp-catalog", "kind": "uses"},
                {"from_id": "cmp-storefront", "to_id": "cmp-cart", "kind": "uses"},
                {"from_id": "cmp-storefront", "to_id": "cmp-orders", "kind": "uses"},
                {"from_id": "cmp-storefront", "to_id": "cmp-accounts", "kind": "uses"},
                {"from_id": "cmp-cart", "to_id": "cmp-catalog", "kind": "uses"},
                {"from_id": "cmp-orders", "to_id": "cmp-payments", "kind": "uses"},
                {"from_id": "cmp-orders", "to_id": "cmp-inventory", "kind": "publishes_to"},
                {"from_id": "cmp-inventory", "to_id": "cmp-catalog", "kind": "uses"},
            ],
        },
        "physical_view": {
            "nodes": [
                {"id": "node-web", "name": "Web", "kind": "server"},
                {"id": "node-app", "name": "Application", "kind": "server"},
                {"id": "node-db", "name": "Database", "kind": "server"},
            ],
            "allocations": [
                {"component_id": "cmp-storefront", "node_id": "node-web"},
                {"component_id": "cmp-catalog", "node_id": "node-app"},
                {"component_id": "cmp-cart", "node_id": "node-app"},
                {"component_id": "cmp-orders", "node_id": "node-app"},
                {"component_id": "cmp-payments", "node_id": "node-app"},
                {"component_id": "cmp-accounts", "node_id": "node-app"},
                {"component_id": "cmp-inventory", "node_id": "node-app"},
            ],
            "links": [
                {"node_a": "node-web", "node_b": "node-app", "protocol": "https"},
                {"node_a": "node-app", "node_b": "node-db", "protocol": "sql"},
            ],
        },
        "traceability_links": links,
        "grounding": ["doc-0001:0000", "doc-0002:0000"],
    }


CLASS_DIAGRAM_BASE = """@startuml
class Catalog {
  +search(query: String): BookList
}
class Book {
  +title: String
  +price: Money
}
class Cart {
  +add(book: Book, quantity: Int)
  +total(): Money
}
class Order {
  +status: String
  +place(): Receipt
}
class Payment {
  +charge(amount: Money): Receipt
}
class Account {
  +authenticate(secret: String): Bool
}
class Inventory {
  +adjust(book: Book, delta: Int)
}
Catalog o-- Book
Cart ..> Catalog
Order ..> Payment
Order o-- Book
Inventory ..> Book
Account ..> Order
@enduml"""

CLASS_DIAGRAM_FIXED = CLASS_DIAGRAM_BASE.replace(
    "Catalog o-- Book",
    "class OrderTracker {\n  +track(orderId: String): Status\n}\nCatalog o-- Book\nOrderTracker ..> Order",
)

SEQUENCE_CHECKOUT = """@startuml
actor Customer
participant Cart
participant Order
participant Payment
Customer -> Cart : checkout()
Cart -> Order : create()
Order -> Payment : charge(total)
Payment --> Order : receipt
Order --> Customer : confirmation
@enduml"""

SEQUENCE_BROWSE = """@startuml
actor Customer
participant Catalog
Customer -> Catalog : search(query)
Catalog --> Customer : results
@enduml"""

DEPLOYMENT_DIAGRAM = """@startuml
node WebServer {
  artifact StorefrontApp
}
node AppServer {
  artifact CatalogService
  artifact CartService
  artifact OrderService
  artifact PaymentService
  artifact AccountService
  artifact InventoryService
}
node DbServer {
  artifact BookstoreDb
}
WebServer -- AppServer : https
AppServer -- DbServer : sql
@enduml"""

REALIZATIONS = {
    "StorefrontApp": "cmp-storefront",
    "CatalogService": "cmp-catalog",
    "CartService": "cmp-cart",
    "OrderService": "cmp-orders",
    "PaymentService": "cmp-payments",
    "AccountService": "cmp-accounts",
    "InventoryService": "cmp-inventory",
}

DESIGNER_LINKS = [
    {"requirement_id": "R-001", "element_path": "class_model/classes/Catalog"},
    {"requirement_id": "R-001", "element_path": "sequence_models/1"},
    {"requirement_id": "R-002", "element_path": "class_model/classes/Cart"},
    {"requirement_id": "R-003", "element_path": "class_model/classes/Payment"},
    {"requirement_id": "R-003", "element_path": "sequence_models/0"},
    {"requirement_id": "R-005", "element_path": "class_model/classes/Inventory"},
    {"requirement_id": "R-006", "element_path": "class_model/classes/Account"},
    {"requirement_id": "R-009", "element_path": "deployment_model/paths/0"},
]


def designer_output(include_tracker: bool) -> dict:
    links = list(DESIGNER_LINKS)
    if include_tracker:
        links.append({"requirement_id": "R-004", "element_path": "class_model/classes/OrderTracker"})
    return {
        "class_diagram": CLASS_DIAGRAM_FIXED if include_tracker else CLASS_DIAGRAM_BASE,
        "sequence_diagrams": [SEQUENCE_CHECKOUT, SEQUENCE_BROWSE],
        "deployment_diagram": DEPLOYMENT_DIAGRAM,
        "artifact_realizations": REALIZATIONS,
        "traceability_links": links,
        "grounding": ["doc-0001:0000", "doc-0003:0000"],
    }


def evaluator_output() -> dict:
    return {"judged_mismatches": [], "grounding": ["doc-0003:0000"]}


def fenced(payload: dict) -> str:
    return "```json\n" + json.dumps(payload, indent=2, sort_keys=True) + "\n```\n"


def write_kb(directory: Path) -> None:
    kb = KnowledgeBase()
    for source, roles, text in KB_DOCS:
        kb.ingest(text, source, roles)
    kb.save(directory / "kb")


def main() -> None:
    bookstore = FIXTURES / "bookstore"
    interactive = FIXTURES / "bookstore_interactive"
    (bookstore / "replay").mkdir(parents=True, exist_ok=True)
    (interactive / "replay").mkdir(parents=True, exist_ok=True)

    (bookstore / "srs.txt").write_text(SRS, encoding="utf-8")
    write_kb(bookstore / "data")

    replay_dir = bookstore / "replay"
    (replay_dir / "analyst_0_analyze.txt").write_text(fenced(analyst_output(None)), encoding="utf-8")
    (replay_dir / "modeler_0_model.txt").write_text(fenced(modeler_output(link_r004=False)), encoding="utf-8")
    (replay_dir / "designer_0_design.txt").write_text(fenced(designer_output(include_tracker=False)), encoding="utf-8")
    (replay_dir / "evaluator_0_evaluate.txt").write_text(fenced(evaluator_output()), encoding="utf-8")
    (replay_dir / "designer_1_design.txt").write_text(fenced(designer_output(include_tracker=True)), encoding="utf-8")
    (replay_dir / "evaluator_1_evaluate.txt").write_text(fenced(evaluator_output()), encoding="utf-8")
    # round 2 serves the optional stakeholder-rejection round
    (replay_dir / "designer_2_design.txt").write_text(fenced(designer_output(include_tracker=True)), encoding="utf-8")
    (replay_dir / "evaluator_2_evaluate.txt").write_text(fenced(evaluator_output()), encoding="utf-8")

    idir = interactive / "replay"
    (idir / "analyst_0_analyze.txt").write_text(fenced(analyst_output(0)), encoding="utf-8")
    (idir / "analyst_0_analyze_2.txt").write_text(fenced(analyst_output(1)), encoding="utf-8")
    (idir / "modeler_0_model.txt").write_text(fenced(modeler_output(link_r004=True)), encoding="utf-8")
    (idir / "designer_0_design.txt").write_text(fenced(designer_output(include_tracker=True)), encoding="utf-8")
    (idir / "evaluator_0_evaluate.txt").write_text(fenced(evaluator_output()), encoding="utf-8")

    # Live run to record the pin.
    kb = KnowledgeBase.load(bookstore / "data" / "kb")
    session = start_session(
        SRS,
        SessionConfig(interactive=False),
        backend=ReplayBackend(replay_dir),
        kb=kb,
    )
    package = run_to_completion(session)
    violations = validate_package(package, srs_length=len(SRS))
    if package.verdict.value != "confirmed" or package.round_count != 2 or violations:
        raise SystemExit(
            f"fixture session went off script: verdict={package.verdict.value} "
            f"rounds={package.round_count} violations={[v.to_dict() for v in violations]}"
        )
    digest = package_digest(package)
    (bookstore / "pinned_digest.txt").write_text(digest + "\n", encoding="utf-8")
    print(f"bookstore fixtures written; pinned digest {digest}")


if __name__ == "__main__":
    main()
