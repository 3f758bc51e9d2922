//! Rotation systems: right-hand-rule face walks, outer-face certificates, and
//! a brute-force search for outerplanar rotations on small graphs.

use crate::error::{Error, Result};
use crate::graph::{FailureSet, Graph, NodeId};

/// Default node limit for the exhaustive rotation search.
pub const ROTATION_SEARCH_LIMIT: usize = 10;

/// A closed walk of directed hops `(node, out-neighbor)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceWalk {
    pub hops: Vec<(NodeId, NodeId)>,
}

impl FaceWalk {
    /// Distinct nodes in order of first visit.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        for &(v, _) in &self.hops {
            if !out.contains(&v) {
                out.push(v);
            }
        }
        out
    }

    pub fn contains_dart(&self, u: NodeId, v: NodeId) -> bool {
        self.hops.contains(&(u, v))
    }
}

/// Next live out-neighbor of `v` after `from` in `v`'s cyclic order.
///
/// Returns `from` itself when it is the only live neighbor.
pub fn rotation_successor(
    g: &Graph,
    rot: &[Vec<NodeId>],
    v: NodeId,
    from: NodeId,
    mask: u64,
) -> Option<NodeId> {
    let r = &rot[v];
    let d = r.len();
    let pos = r.iter().position(|&x| x == from)?;
    (1..=d).map(|k| r[(pos + k) % d]).find(|&w| {
        let port = g.port(v, w).expect("rotation entries are neighbors");
        mask & (1 << port) == 0
    })
}

fn walk_from(g: &Graph, rot: &[Vec<NodeId>], masks: &[u64], start: NodeId, first: NodeId) -> FaceWalk {
    let mut hops = vec![(start, first)];
    let (mut prev, mut cur) = (start, first);
    loop {
        let next = rotation_successor(g, rot, cur, prev, masks[cur]).expect("in-port is live");
        if (cur, next) == (start, first) {
            break;
        }
        hops.push((cur, next));
        prev = cur;
        cur = next;
    }
    FaceWalk { hops }
}

/// Walks the face of `g \ f` that contains the dart `start → first_out`,
/// leaving each node through the rotation successor of its in-port.
pub fn outer_face_walk(g: &Graph, f: &FailureSet, start: NodeId, first_out: NodeId) -> Result<FaceWalk> {
    let rot = g.rotation().ok_or(Error::MissingRotation)?;
    g.check_node(start)?;
    g.check_node(first_out)?;
    let masks = g.local_masks(f);
    if g.live_neighbors(start, masks[start]).next().is_none() {
        return Err(Error::Isolated(start));
    }
    let port = g.port(start, first_out).ok_or(Error::NotAnEdge(start, first_out))?;
    if masks[start] & (1 << port) != 0 {
        return Err(Error::NotAnEdge(start, first_out));
    }
    Ok(walk_from(g, rot, &masks, start, first_out))
}

/// All faces of the embedding of `g \ f`, each listed once, in canonical
/// order of their first dart (lowest node, rotation order).
pub fn faces(g: &Graph, f: &FailureSet) -> Result<Vec<FaceWalk>> {
    let rot = g.rotation().ok_or(Error::MissingRotation)?;
    let masks = g.local_masks(f);
    Ok(faces_with_masks(g, rot, &masks))
}

fn faces_with_masks(g: &Graph, rot: &[Vec<NodeId>], masks: &[u64]) -> Vec<FaceWalk> {
    let mut used = std::collections::HashSet::new();
    let mut out = Vec::new();
    for v in g.nodes() {
        for &u in &rot[v] {
            let port = g.port(v, u).unwrap();
            if masks[v] & (1 << port) != 0 || used.contains(&(v, u)) {
                continue;
            }
            let w = walk_from(g, rot, masks, v, u);
            used.extend(w.hops.iter().copied());
            out.push(w);
        }
    }
    out
}

/// Euler check `V − E + F = 2` on every component that has an edge.
pub fn is_planar_embedding(g: &Graph) -> Result<bool> {
    let rot = g.rotation().ok_or(Error::MissingRotation)?;
    let masks = vec![0u64; g.node_count()];
    Ok(planar_with(g, rot, &masks))
}

fn planar_with(g: &Graph, rot: &[Vec<NodeId>], masks: &[u64]) -> bool {
    let faces = faces_with_masks(g, rot, masks);
    let mut comp = vec![usize::MAX; g.node_count()];
    let mut count = 0;
    for v in g.nodes() {
        if comp[v] == usize::MAX {
            for (u, r) in g.reachable_with_masks(masks, v).into_iter().enumerate() {
                if r {
                    comp[u] = count;
                }
            }
            count += 1;
        }
    }
    let mut nodes = vec![0i64; count];
    let mut edges = vec![0i64; count];
    let mut fcount = vec![0i64; count];
    for v in g.nodes() {
        nodes[comp[v]] += 1;
        edges[comp[v]] += g.live_neighbors(v, masks[v]).count() as i64;
    }
    for f in &faces {
        fcount[comp[f.hops[0].0]] += 1;
    }
    (0..count).all(|c| edges[c] == 0 || nodes[c] - edges[c] / 2 + fcount[c] == 2)
}

/// The canonical outer face: the first face (lowest node, rotation order)
/// that visits every node, provided the embedding is planar.
pub fn outer_face(g: &Graph) -> Result<Option<FaceWalk>> {
    let rot = g.rotation().ok_or(Error::MissingRotation)?;
    let masks = vec![0u64; g.node_count()];
    if !planar_with(g, rot, &masks) {
        return Ok(None);
    }
    let n = g.node_count();
    Ok(faces_with_masks(g, rot, &masks).into_iter().find(|w| w.nodes().len() == n))
}

/// Outer-face certificate for the given embedding: planar, and some face
/// visits every node.
pub fn validate_outerplanar(g: &Graph) -> Result<bool> {
    if g.node_count() <= 1 {
        return Ok(true);
    }
    Ok(outer_face(g)?.is_some())
}

pub fn find_outerplanar_rotation(g: &Graph) -> Result<Option<Vec<Vec<NodeId>>>> {
    find_outerplanar_rotation_with_limit(g, ROTATION_SEARCH_LIMIT)
}

/// Exhaustive search over cyclic orders, first neighbor fixed per node.
pub fn find_outerplanar_rotation_with_limit(g: &Graph, limit: usize) -> Result<Option<Vec<Vec<NodeId>>>> {
    let n = g.node_count();
    if n > limit {
        return Err(Error::LimitExceeded { what: "node count", actual: n, limit });
    }
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if n <= 1 {
        return Ok(Some(vec![Vec::new(); n]));
    }
    // outerplanar graphs have at most 2n - 3 edges
    if g.edge_count() > 2 * n - 3 {
        return Ok(None);
    }
    let choices: Vec<Vec<Vec<NodeId>>> = g.nodes().map(|v| cyclic_orders(g.neighbors(v))).collect();
    let mut idx = vec![0usize; n];
    let plain = g.clone().without_rotation();
    loop {
        let rot: Vec<Vec<NodeId>> = (0..n).map(|v| choices[v][idx[v]].clone()).collect();
        let h = plain.clone().with_rotation(rot.clone()).expect("cyclic orders are valid");
        if validate_outerplanar(&h)? {
            return Ok(Some(rot));
        }
        let mut k = 0;
        loop {
            if k == n {
                return Ok(None);
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn cyclic_orders(nbrs: &[NodeId]) -> Vec<Vec<NodeId>> {
    if nbrs.len() <= 2 {
        return vec![nbrs.to_vec()];
    }
    let first = nbrs[0];
    let mut rest: Vec<NodeId> = nbrs[1..].to_vec();
    let mut out = Vec::new();
    permute(&mut rest, 0, &mut |p| {
        let mut v = vec![first];
        v.extend_from_slice(p);
        out.push(v);
    });
    out
}

pub(crate) fn permute<T: Clone>(items: &mut Vec<T>, k: usize, visit: &mut dyn FnMut(&[T])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}
