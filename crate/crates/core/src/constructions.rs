//! Constructive forwarding patterns: face routing on outerplanar and planar
//! embeddings, target removal, and the two-hop rules.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::embedding::{faces, find_outerplanar_rotation, is_planar_embedding, outer_face, validate_outerplanar};
use crate::error::{Error, Result};
use crate::forwarding::{Pattern, Procedural, SkippingPattern};
use crate::graph::{FailureSet, Graph, NodeId};

/// Successor maps that follow the rotation: a packet entering from `u` tries
/// the neighbor after `u` in the cyclic order.
fn rotation_maps(rot: &[Vec<NodeId>]) -> Vec<BTreeMap<NodeId, NodeId>> {
    rot.iter().map(|o| (0..o.len()).map(|k| (o[k], o[(k + 1) % o.len()])).collect()).collect()
}

/// For each node, the first out-neighbor of that node on the outer face.
fn outer_starts(g: &Graph) -> Result<Vec<Option<NodeId>>> {
    let face = outer_face(g)?.ok_or(Error::NotOuterplanar)?;
    let mut start = vec![None; g.node_count()];
    for &(v, w) in &face.hops {
        start[v].get_or_insert(w);
    }
    Ok(start)
}

/// Skipping pattern that walks the outer face in rotation order; the start
/// port of every node is its first outgoing dart on the outer face.
pub fn outerplanar_pattern(g: &Graph, tgt: NodeId) -> Result<SkippingPattern> {
    g.check_node(tgt)?;
    let rot = g.rotation().ok_or(Error::MissingRotation)?;
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if !validate_outerplanar(g)? {
        return Err(Error::NotOuterplanar);
    }
    let start = outer_starts(g)?;
    SkippingPattern::from_maps(g, &rotation_maps(rot), &start, &vec![Vec::new(); g.node_count()])
}

/// Face-routing pattern for sources that share a face with the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SameFace {
    #[serde(skip)]
    pub pattern: Option<SkippingPattern>,
    /// Sources whose start port lies on a face containing the target.
    pub covered: Vec<NodeId>,
    /// Sources sharing no face with the target.
    pub not_covered: Vec<NodeId>,
}

/// Rotation-successor routing where each node starts on a face it shares
/// with `tgt`. `choice` overrides the face (index into
/// [`faces`]`(g, ∅)`) used for particular sources.
pub fn sameface_pattern(g: &Graph, tgt: NodeId, choice: &BTreeMap<NodeId, usize>) -> Result<SameFace> {
    g.check_node(tgt)?;
    let rot = g.rotation().ok_or(Error::MissingRotation)?;
    if !is_planar_embedding(g)? {
        return Err(Error::Pattern("rotation is not a planar embedding".into()));
    }
    let all = faces(g, &FailureSet::empty())?;
    let mut start: Vec<Option<NodeId>> = rot.iter().map(|o| o.first().copied()).collect();
    let (mut covered, mut not_covered) = (Vec::new(), Vec::new());
    for v in g.nodes().filter(|&v| v != tgt && g.degree(v) > 0) {
        let shares = |f: &crate::embedding::FaceWalk| f.hops.iter().any(|h| h.0 == tgt) && f.hops.iter().any(|h| h.0 == v);
        let face = match choice.get(&v) {
            Some(&k) => {
                let f = all.get(k).ok_or_else(|| Error::Pattern(format!("face {k} does not exist")))?;
                Some(f).filter(|f| shares(f))
            }
            None => all.iter().find(|f| shares(f)),
        };
        match face.and_then(|f| f.hops.iter().find(|h| h.0 == v)) {
            Some(&(_, w)) => {
                start[v] = Some(w);
                covered.push(v);
            }
            None => not_covered.push(v),
        }
    }
    let p = SkippingPattern::from_maps(g, &rotation_maps(rot), &start, &vec![Vec::new(); g.node_count()])?;
    Ok(SameFace { pattern: Some(p), covered, not_covered })
}

/// Forward to `tgt` when that link is live; otherwise walk the outer face of
/// `g − tgt`, whose components must be outerplanar.
///
/// The rotation of `g` restricted to `g − tgt` is used when it is
/// outerplanar on every component; otherwise each component gets a
/// rotation from the exhaustive search.
pub fn target_removal_pattern(g: &Graph, tgt: NodeId) -> Result<Pattern> {
    g.check_node(tgt)?;
    let rest = g.induced_remove(&[], &[tgt])?;
    let h = &rest.graph;
    let back: Vec<NodeId> = (0..g.node_count()).filter(|&v| v != tgt).collect();
    let n = g.node_count();
    let mut orders: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut start: Vec<Option<NodeId>> = vec![None; n];
    let mut done = vec![false; h.node_count()];
    for root in h.nodes() {
        if done[root] {
            continue;
        }
        let reach = h.reachable(&FailureSet::empty(), root);
        let others: Vec<NodeId> = h.nodes().filter(|&v| !reach[v]).collect();
        let comp = h.induced_remove(&[], &others)?;
        let members: Vec<NodeId> = h.nodes().filter(|&v| reach[v]).collect();
        for &v in &members {
            done[v] = true;
        }
        let mut c = comp.graph;
        let restricted_ok = c.rotation().is_some() && validate_outerplanar(&c)?;
        if !restricted_ok {
            let rot = find_outerplanar_rotation(&c.clone().without_rotation())?.ok_or(Error::NotOuterplanar)?;
            c = c.without_rotation().with_rotation(rot)?;
        }
        let rot = c.rotation().expect("set above").to_vec();
        let cs = if c.node_count() > 1 { outer_starts(&c)? } else { vec![None] };
        for (k, &hv) in members.iter().enumerate() {
            let v = back[hv];
            orders[v] = rot[k].iter().map(|&x| back[members[x]]).collect();
            start[v] = cs[k].map(|x| back[members[x]]);
        }
    }
    // the target link sits in the cycle but is never chosen by the fallback
    let mut blocked = vec![Vec::new(); n];
    for &u in g.neighbors(tgt) {
        orders[u].push(tgt);
        blocked[u].push(tgt);
        start[u].get_or_insert(tgt);
    }
    orders[tgt] = g.neighbors(tgt).to_vec();
    start[tgt] = orders[tgt].first().copied();
    let next: Vec<BTreeMap<NodeId, NodeId>> = orders
        .iter()
        .map(|o| (0..o.len()).map(|k| (o[k], o[(k + 1) % o.len()])).collect())
        .collect();
    let fallback = SkippingPattern::from_maps(g, &next, &start, &blocked)?;
    Ok(Pattern::Procedural(Procedural::TargetFirst { target: tgt, fallback }))
}

/// Source-matching rule: `src` tries its neighbors in turn (the target
/// first), every other node forwards to `tgt` if it can and bounces
/// otherwise.
pub fn two_hop_source_pattern(g: &Graph, src: NodeId, tgt: NodeId) -> Result<Pattern> {
    g.check_node(src)?;
    g.check_node(tgt)?;
    if src == tgt {
        return Err(Error::TargetIsSource(src));
    }
    Ok(Pattern::Procedural(Procedural::TwoHopSource { source: src, target: tgt }))
}

/// Id-based rule: target if live, else the lowest live neighbor when it is
/// below the current node; local minima probe their neighbors in ascending
/// cyclic order.
pub fn two_hop_id_pattern(g: &Graph, tgt: NodeId) -> Result<Pattern> {
    g.check_node(tgt)?;
    Ok(Pattern::Procedural(Procedural::TwoHopId { target: tgt }))
}
