"""Independent reference implementations used as test oracles.

Everything here is deliberately written against the published JSON schemas and
documented rules, not against the library code paths it checks: a brute-force
reference walker, a second canonical serializer, pure-python cosine retrieval,
a bytewise FNV-1a, and a word-count chunk planner.
"""

from __future__ import annotations

import json


def walk_references(pkg: dict) -> list[str]:
    """Exhaustively walk every cross-reference field of a package JSON document.

    Returns a list of human-readable problem strings; empty means every
    reference resolves and every documented invariant holds.
    """
    problems: list[str] = []
    req_ids = [r["id"] for r in pkg["requirement_set"]]
    if len(req_ids) != len(set(req_ids)):
        problems.append("duplicate requirement ids")
    req_set = set(req_ids)
    for r in pkg["requirement_set"]:
        if r["kind"] == "functional" and r["attributes"]:
            problems.append(f"functional requirement {r['id']} with attributes")
        s, e = r["source_span"]
        if s < 0 or e < s:
            problems.append(f"bad span on {r['id']}")
    for t in pkg["asr_tags"]:
        if t["requirement_id"] not in req_set:
            problems.append(f"asr tag -> missing requirement {t['requirement_id']}")
        if not 1 <= t["criticality"] <= 4:
            problems.append("asr criticality out of range")
    risk_ids = set()
    for r in pkg["risk_flags"]:
        if r["id"] in risk_ids:
            problems.append(f"duplicate risk {r['id']}")
        risk_ids.add(r["id"])
        if not r["affected_requirement_ids"]:
            problems.append(f"risk {r['id']} affects nothing")
        for rid in r["affected_requirement_ids"]:
            if rid not in req_set:
                problems.append(f"risk {r['id']} -> missing requirement {rid}")
        if r["resolution"] == "assumed" and not r.get("assumption", "").strip():
            problems.append(f"assumed risk {r['id']} without assumption")
    qids = set()
    for c in pkg["clarifications"]:
        if c["question_id"] in qids:
            problems.append("duplicate question id")
        qids.add(c["question_id"])
        if c["risk_id"] not in risk_ids:
            problems.append(f"clarification -> missing risk {c['risk_id']}")
        if (c["status"] == "answered") != ("answer" in c):
            problems.append(f"clarification {c['question_id']} status/answer mismatch")
    ranks = sorted(q["rank"] for q in pkg["qa_priorities"])
    if ranks and ranks != list(range(1, len(ranks) + 1)):
        problems.append("qa ranks not a 1..n permutation")
    adr_ids = set()
    for a in pkg["adrs"]:
        if a["id"] in adr_ids:
            problems.append(f"duplicate adr {a['id']}")
        adr_ids.add(a["id"])
        if not a["addresses"]:
            problems.append(f"adr {a['id']} addresses nothing")
        for rid in a["addresses"]:
            if rid not in req_set:
                problems.append(f"adr {a['id']} -> missing requirement {rid}")
    comp_ids = [c["id"] for c in pkg["logical_view"]["components"]]
    if len(comp_ids) != len(set(comp_ids)):
        problems.append("duplicate component ids")
    comp_set = set(comp_ids)
    for rel in pkg["logical_view"]["relations"]:
        for end in (rel["from_id"], rel["to_id"]):
            if end not in comp_set:
                problems.append(f"logical relation -> missing component {end}")
        if rel["kind"] == "contains" and rel["from_id"] == rel["to_id"]:
            problems.append("contains self-loop")
    node_ids = [n["id"] for n in pkg["physical_view"]["nodes"]]
    if len(node_ids) != len(set(node_ids)):
        problems.append("duplicate physical node ids")
    node_set = set(node_ids)
    for al in pkg["physical_view"]["allocations"]:
        if al["component_id"] not in comp_set:
            problems.append(f"allocation -> missing component {al['component_id']}")
        if al["node_id"] not in node_set:
            problems.append(f"allocation -> missing node {al['node_id']}")
    for ln in pkg["physical_view"]["links"]:
        for end in (ln["node_a"], ln["node_b"]):
            if end not in node_set:
                problems.append(f"link -> missing node {end}")
    class_names = [c["name"] for c in pkg["class_model"]["classes"]]
    if len(class_names) != len(set(class_names)):
        problems.append("duplicate class names")
    for i, seq in enumerate(pkg["sequence_models"]):
        part_names = [p["name"] for p in seq["participants"]]
        if len(part_names) != len(set(part_names)):
            problems.append(f"duplicate participants in sequence {i}")
        part_set = set(part_names)
        for j, m in enumerate(seq["messages"]):
            if m["seq_index"] != j + 1:
                problems.append(f"sequence {i} message {j} seq_index {m['seq_index']}")
            for end in (m["from"], m["to"]):
                if end not in part_set:
                    problems.append(f"sequence {i} message -> missing participant {end}")
    dm = pkg["deployment_model"]
    deploy_names = list(dm["nodes"]) + [a["name"] for a in dm["artifacts"]]
    if len(deploy_names) != len(set(deploy_names)):
        problems.append("duplicate deployment names")
    dnode_set = set(dm["nodes"])
    art_set = {a["name"] for a in dm["artifacts"]}
    placed: dict[str, int] = {}
    for p in dm["placements"]:
        if p["artifact"] not in art_set:
            problems.append(f"placement -> missing artifact {p['artifact']}")
        if p["node"] not in dnode_set:
            problems.append(f"placement -> missing node {p['node']}")
        placed[p["artifact"]] = placed.get(p["artifact"], 0) + 1
    for a in dm["artifacts"]:
        if placed.get(a["name"], 0) != 1:
            problems.append(f"artifact {a['name']} placed {placed.get(a['name'], 0)} times")
    for p in dm["paths"]:
        for end in (p["node_a"], p["node_b"]):
            if end not in dnode_set:
                problems.append(f"path -> missing node {end}")
    for link in pkg["traceability_links"]:
        if link["requirement_id"] not in req_set:
            problems.append(f"traceability -> missing requirement {link['requirement_id']}")
        if not element_path_resolves(pkg, link["element_path"]):
            problems.append(f"traceability -> unresolved path {link['element_path']}")
    if pkg["verdict"] == "confirmed" and not pkg["sequence_models"]:
        problems.append("confirmed package without sequence models")
    return problems


def element_path_resolves(pkg: dict, path: str) -> bool:
    parts = path.split("/")
    try:
        if parts[0] == "adrs":
            return any(a["id"] == parts[1] for a in pkg["adrs"])
        if parts[0] == "qa_priorities":
            return any(q["attribute"] == parts[1] for q in pkg["qa_priorities"])
        if parts[0] == "logical_view" and parts[1] == "components":
            return any(c["id"] == parts[2] for c in pkg["logical_view"]["components"])
        if parts[0] == "logical_view" and parts[1] == "relations":
            return int(parts[2]) < len(pkg["logical_view"]["relations"])
        if parts[0] == "physical_view" and parts[1] == "nodes":
            return any(n["id"] == parts[2] for n in pkg["physical_view"]["nodes"])
        if parts[0] == "physical_view" and parts[1] == "links":
            return int(parts[2]) < len(pkg["physical_view"]["links"])
        if parts[0] == "class_model" and parts[1] == "classes":
            return any(c["name"] == parts[2] for c in pkg["class_model"]["classes"])
        if parts[0] == "class_model" and parts[1] == "relations":
            return int(parts[2]) < len(pkg["class_model"]["relations"])
        if parts[0] == "sequence_models":
            idx = int(parts[1])
            if idx >= len(pkg["sequence_models"]):
                return False
            if len(parts) == 2:
                return True
            seq = pkg["sequence_models"][idx]
            if parts[2] == "participants":
                return any(p["name"] == parts[3] for p in seq["participants"])
            if parts[2] == "messages":
                return any(str(m["seq_index"]) == parts[3] for m in seq["messages"])
            return False
        if parts[0] == "deployment_model" and parts[1] == "nodes":
            return parts[2] in pkg["deployment_model"]["nodes"]
        if parts[0] == "deployment_model" and parts[1] == "artifacts":
            return any(a["name"] == parts[2] for a in pkg["deployment_model"]["artifacts"])
        if parts[0] == "deployment_model" and parts[1] == "paths":
            return int(parts[2]) < len(pkg["deployment_model"]["paths"])
    except (IndexError, ValueError):
        return False
    return False


def independent_canonical_bytes(pkg: dict) -> bytes:
    """Second implementation of the canonical byte form, from the documented rules."""
    data = json.loads(json.dumps(pkg))  # deep copy
    data["requirement_set"].sort(key=lambda r: r["id"])
    data["asr_tags"].sort(key=lambda t: t["requirement_id"])
    data["risk_flags"].sort(key=lambda r: r["id"])
    data["clarifications"].sort(key=lambda c: c["question_id"])
    data["qa_priorities"].sort(key=lambda q: q["rank"])
    data["adrs"].sort(key=lambda a: a["id"])
    data["logical_view"]["components"].sort(key=lambda c: c["id"])
    data["logical_view"]["relations"].sort(key=lambda r: (r["from_id"], r["to_id"], r["kind"]))
    data["physical_view"]["nodes"].sort(key=lambda n: n["id"])
    data["physical_view"]["allocations"].sort(key=lambda a: (a["component_id"], a["node_id"]))
    data["physical_view"]["links"].sort(key=lambda l: (l["node_a"], l["node_b"], l["protocol"]))
    dm = data["deployment_model"]
    node_of = {p["artifact"]: p["node"] for p in dm["placements"]}
    ordered = [a for node in dm["nodes"] for a in dm["artifacts"] if node_of.get(a["name"]) == node]
    ordered += [a for a in dm["artifacts"] if a not in ordered]
    dm["artifacts"] = ordered
    dm["placements"] = [
        {"artifact": a["name"], "node": node_of[a["name"]]} for a in ordered if a["name"] in node_of
    ] + [p for p in dm["placements"] if p["node"] not in dm["nodes"]]
    data["traceability_links"].sort(key=lambda t: (t["requirement_id"], t["element_path"]))
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def fnv1a64_oracle(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) % (1 << 64)
    return h


def cosine_oracle(vec_a, vec_b) -> float:
    """Pure-python cosine over already-stored float32 components."""
    dot = sum(float(x) * float(y) for x, y in zip(vec_a, vec_b))
    na = sum(float(x) * float(x) for x in vec_a) ** 0.5
    nb = sum(float(y) * float(y) for y in vec_b) ** 0.5
    return dot / (na * nb)


def brute_force_search(chunks, vectors, query_vec, role, k):
    """Reference retrieval: score every role-matching chunk, stable sort, cut at k."""
    scored = []
    for i, chunk in enumerate(chunks):
        if role in {r.value for r in chunk.role_tags}:
            scored.append((cosine_oracle(vectors[i], query_vec), i, chunk.chunk_id))
    scored.sort(key=lambda t: (-t[0], t[1]))
    return [(cid, min(1.0, max(0.0, s))) for s, _, cid in scored[:k]]


def greedy_chunk_plan_words(paragraph_word_counts: list[int], limit: int = 200) -> list[int]:
    """Word-count view of the greedy paragraph merge rule."""
    plan: list[int] = []
    current = 0
    for n in paragraph_word_counts:
        if current and current + n > limit:
            plan.append(current)
            current = 0
        current += n
    if current:
        plan.append(current)
    return plan
