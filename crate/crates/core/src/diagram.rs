//! Text-diagram graph IR.
//!
//! A text diagram is a non-planar port graph: word vertices for every
//! terminal, gate vertices for plumbing (merge, swap, cup, cap), NP-typed
//! wires plus attachment edges, open boundary ports for the noun
//! participants, and phase bubbles grouping the operands of conjunctions
//! and sentential-complement verbs.
//!
//! Two rewrite rules normalize a diagram: a cup/cap S-bend straightens to
//! a plain wire, and two adjacent swaps cancel. Both strictly decrease the
//! vertex count, so normalization terminates; randomized application order
//! reaches the same fixpoint up to isomorphism.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::grammar::{
    clause_noun_roles, clause_shape, head_noun, Category, ClauseShape, Grammar, Lang, Leaf,
    LinkKind, Node, ParseTree, TreePath,
};
use crate::lexicon::{Marker, NounAttributes, PronounKind};

pub type VertexId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GateKind {
    Merge,
    Swap,
    Cup,
    Cap,
}

/// What a word vertex remembers about its leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct WordInfo {
    pub surface: String,
    pub lang: Lang,
    /// Base form in the diagram's own language.
    pub base: String,
    pub en_base: Option<String>,
    pub bn_base: Option<String>,
    pub pos: Option<Category>,
    pub clause: usize,
    pub pronoun: Option<PronounKind>,
    pub stripped: Vec<Marker>,
    pub entry_attrs: NounAttributes,
    pub attrs: NounAttributes,
    pub gender_agreeing: bool,
    pub one_sided: bool,
    /// Position of the leaf in its sentence, for deterministic recency.
    pub token_ix: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VertexLabel {
    Word(WordInfo),
    Gate(GateKind),
}

impl VertexLabel {
    pub fn word(&self) -> Option<&WordInfo> {
        match self {
            VertexLabel::Word(w) => Some(w),
            VertexLabel::Gate(_) => None,
        }
    }

    fn gate(&self) -> Option<GateKind> {
        match self {
            VertexLabel::Gate(g) => Some(*g),
            VertexLabel::Word(_) => None,
        }
    }
}

/// One end of an edge: a slot on a vertex. Slots order a word's operands
/// (slot 0 is the subject wire of a verb) and give gates their geometry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Port {
    pub vertex: VertexId,
    pub slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// NP-typed wire.
    Wire,
    /// Attachment of a modifier or adposition to the process it modifies.
    Attach,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub a: Port,
    pub b: Port,
    pub kind: EdgeKind,
}

/// Phase bubble: a grouping annotation owned by a conjunction or
/// sentential-complement word, wrapping one operand subgraph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bubble {
    pub owner: VertexId,
    pub members: BTreeSet<VertexId>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TextDiagram {
    vertices: Vec<VertexLabel>,
    edges: Vec<Edge>,
    boundary_top: Vec<Port>,
    boundary_bottom: Vec<Port>,
    bubbles: Vec<Bubble>,
    next_slot: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DiagramError {
    #[error("tree uses a construct with no diagram schema: {0}")]
    UnsupportedConstruct(String),
    #[error("plugged wire types do not match")]
    TypeMismatch,
    #[error("plugging names a non-boundary port (index {0})")]
    DanglingPlug(usize),
    #[error("terminal correspondence is not a bijection: `{0}` unmapped or reused")]
    NotBijective(String),
}

impl TextDiagram {
    pub fn new() -> TextDiagram {
        TextDiagram::default()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[VertexLabel] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn bubbles(&self) -> &[Bubble] {
        &self.bubbles
    }

    pub fn boundary_top(&self) -> &[Port] {
        &self.boundary_top
    }

    pub fn boundary_bottom(&self) -> &[Port] {
        &self.boundary_bottom
    }

    pub fn add_word(&mut self, info: WordInfo) -> VertexId {
        self.vertices.push(VertexLabel::Word(info));
        self.next_slot.push(0);
        self.vertices.len() - 1
    }

    pub fn add_gate(&mut self, kind: GateKind) -> VertexId {
        self.vertices.push(VertexLabel::Gate(kind));
        self.next_slot.push(0);
        self.vertices.len() - 1
    }

    fn fresh_port(&mut self, v: VertexId) -> Port {
        let slot = self.next_slot[v];
        self.next_slot[v] += 1;
        Port { vertex: v, slot }
    }

    /// Connect two vertices with a new edge, allocating the next slot on
    /// each side. Slot order on word vertices is operand order.
    pub fn connect(&mut self, a: VertexId, b: VertexId, kind: EdgeKind) {
        let pa = self.fresh_port(a);
        let pb = self.fresh_port(b);
        self.edges.push(Edge { a: pa, b: pb, kind });
    }

    fn connect_ports(&mut self, a: Port, b: Port, kind: EdgeKind) {
        self.edges.push(Edge { a, b, kind });
    }

    pub fn open_top(&mut self, v: VertexId) {
        let p = self.fresh_port(v);
        self.boundary_top.push(p);
    }

    pub fn open_bottom(&mut self, v: VertexId) {
        let p = self.fresh_port(v);
        self.boundary_bottom.push(p);
    }

    pub fn add_bubble(&mut self, owner: VertexId, members: BTreeSet<VertexId>) {
        self.bubbles.push(Bubble { owner, members });
    }

    /// Insert an S-bend (cap then cup) on an existing edge; normalization
    /// removes it again. Test scaffolding for the rewrite rules.
    pub fn insert_s_bend(&mut self, edge_ix: usize) {
        let edge = self.edges[edge_ix];
        let cap = self.add_gate(GateKind::Cap);
        let cup = self.add_gate(GateKind::Cup);
        self.edges.remove(edge_ix);
        self.connect_ports(edge.a, Port { vertex: cap, slot: 0 }, edge.kind);
        self.connect_ports(
            Port { vertex: cap, slot: 1 },
            Port { vertex: cup, slot: 0 },
            EdgeKind::Wire,
        );
        self.connect_ports(Port { vertex: cup, slot: 1 }, edge.b, edge.kind);
        self.next_slot[cap] = 2;
        self.next_slot[cup] = 2;
    }

    /// Insert a cancelling swap pair across two existing edges.
    pub fn insert_double_swap(&mut self, first_ix: usize, second_ix: usize) {
        assert_ne!(first_ix, second_ix);
        let e1 = self.edges[first_ix];
        let e2 = self.edges[second_ix];
        let (hi, lo) = if first_ix > second_ix {
            (first_ix, second_ix)
        } else {
            (second_ix, first_ix)
        };
        self.edges.remove(hi);
        self.edges.remove(lo);
        let s1 = self.add_gate(GateKind::Swap);
        let s2 = self.add_gate(GateKind::Swap);
        self.next_slot[s1] = 4;
        self.next_slot[s2] = 4;
        let p = |v: VertexId, slot: usize| Port { vertex: v, slot };
        self.connect_ports(e1.a, p(s1, 0), e1.kind);
        self.connect_ports(e2.a, p(s1, 1), e2.kind);
        self.connect_ports(p(s1, 2), p(s2, 0), EdgeKind::Wire);
        self.connect_ports(p(s1, 3), p(s2, 1), EdgeKind::Wire);
        // Crossing twice restores the straight wiring.
        self.connect_ports(p(s2, 2), e2.b, e2.kind);
        self.connect_ports(p(s2, 3), e1.b, e1.kind);
    }

    /// Insert a closed cap/cup circle, disconnected from everything.
    pub fn insert_circle(&mut self) {
        let cap = self.add_gate(GateKind::Cap);
        let cup = self.add_gate(GateKind::Cup);
        let p = |v: VertexId, slot: usize| Port { vertex: v, slot };
        self.connect_ports(p(cap, 0), p(cup, 0), EdgeKind::Wire);
        self.connect_ports(p(cap, 1), p(cup, 1), EdgeKind::Wire);
        self.next_slot[cap] = 2;
        self.next_slot[cup] = 2;
    }

    fn edges_between(&self, a: VertexId, b: VertexId) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| {
                (e.a.vertex == a && e.b.vertex == b) || (e.a.vertex == b && e.b.vertex == a)
            })
            .map(|(i, _)| i)
            .collect()
    }

    fn incident(&self, v: VertexId) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.a.vertex == v || e.b.vertex == v)
            .map(|(i, _)| i)
            .collect()
    }

    fn far_end(&self, edge_ix: usize, v: VertexId) -> Port {
        let e = &self.edges[edge_ix];
        if e.a.vertex == v {
            e.b
        } else {
            e.a
        }
    }

    pub fn wire_degree(&self, v: VertexId) -> usize {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Wire && (e.a.vertex == v || e.b.vertex == v))
            .count()
    }

    fn attach_degree(&self, v: VertexId) -> usize {
        self.edges
            .iter()
            .filter(|e| e.kind == EdgeKind::Attach && (e.a.vertex == v || e.b.vertex == v))
            .count()
    }

    fn boundary_count(&self, v: VertexId) -> (usize, usize) {
        (
            self.boundary_top.iter().filter(|p| p.vertex == v).count(),
            self.boundary_bottom.iter().filter(|p| p.vertex == v).count(),
        )
    }

    /// Word-vertex base labels, with multiplicity.
    pub fn word_bases(&self) -> Vec<String> {
        self.vertices
            .iter()
            .filter_map(|v| v.word().map(|w| w.base.clone()))
            .collect()
    }

    /// Surfaces of all word vertices, in vertex order.
    pub fn word_surfaces(&self) -> Vec<String> {
        self.vertices
            .iter()
            .filter_map(|v| v.word().map(|w| w.surface.clone()))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Sequential composition

/// Plug `below`'s top boundary onto `above`'s bottom boundary. `plugging`
/// pairs (below-top index, above-bottom index); unplugged boundaries are
/// concatenated. No rewriting happens here.
pub fn compose_sequential(
    above: &TextDiagram,
    below: &TextDiagram,
    plugging: &[(usize, usize)],
) -> Result<TextDiagram, DiagramError> {
    let offset = above.vertices.len();
    let mut out = above.clone();
    out.vertices.extend(below.vertices.iter().cloned());
    out.next_slot.extend(below.next_slot.iter().cloned());
    let shift = |p: Port| Port {
        vertex: p.vertex + offset,
        slot: p.slot,
    };
    for e in &below.edges {
        out.edges.push(Edge {
            a: shift(e.a),
            b: shift(e.b),
            kind: e.kind,
        });
    }
    for b in &below.bubbles {
        out.bubbles.push(Bubble {
            owner: b.owner + offset,
            members: b.members.iter().map(|v| v + offset).collect(),
        });
    }
    let mut used_top = vec![false; below.boundary_top.len()];
    let mut used_bottom = vec![false; above.boundary_bottom.len()];
    for &(top_ix, bottom_ix) in plugging {
        let top = below
            .boundary_top
            .get(top_ix)
            .copied()
            .ok_or(DiagramError::DanglingPlug(top_ix))?;
        let bottom = above
            .boundary_bottom
            .get(bottom_ix)
            .copied()
            .ok_or(DiagramError::DanglingPlug(bottom_ix))?;
        if used_top[top_ix] || used_bottom[bottom_ix] {
            // A boundary end carries exactly one wire.
            return Err(DiagramError::TypeMismatch);
        }
        used_top[top_ix] = true;
        used_bottom[bottom_ix] = true;
        out.connect_ports(bottom, shift(top), EdgeKind::Wire);
    }
    out.boundary_top = above.boundary_top.clone();
    for (ix, p) in below.boundary_top.iter().enumerate() {
        if !used_top[ix] {
            out.boundary_top.push(shift(*p));
        }
    }
    out.boundary_bottom = below.boundary_bottom.iter().map(|p| shift(*p)).collect();
    for (ix, p) in above.boundary_bottom.iter().enumerate() {
        if !used_bottom[ix] {
            out.boundary_bottom.push(*p);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Normalization

#[derive(Debug, Clone, Copy)]
enum Rewrite {
    /// cap, cup, connecting edge count (1 = S-bend, 2 = closed circle)
    Yank(VertexId, VertexId),
    /// first swap, second swap
    DoubleSwap(VertexId, VertexId),
}

impl TextDiagram {
    fn applicable_rewrites(&self) -> Vec<Rewrite> {
        let mut out = Vec::new();
        for (v, label) in self.vertices.iter().enumerate() {
            match label.gate() {
                Some(GateKind::Cap) => {
                    for e in self.incident(v) {
                        let far = self.far_end(e, v).vertex;
                        if self.vertices[far].gate() == Some(GateKind::Cup) {
                            out.push(Rewrite::Yank(v, far));
                            break;
                        }
                    }
                }
                Some(GateKind::Swap) => {
                    // A pair rewrites when this swap's output slots (2, 3)
                    // both feed the same other swap's input slots (0, 1).
                    let mut targets: Vec<VertexId> = Vec::new();
                    for e_ix in self.incident(v) {
                        let e = &self.edges[e_ix];
                        let (near, far) = if e.a.vertex == v { (e.a, e.b) } else { (e.b, e.a) };
                        if near.slot >= 2
                            && far.slot < 2
                            && far.vertex != v
                            && self.vertices[far.vertex].gate() == Some(GateKind::Swap)
                        {
                            targets.push(far.vertex);
                        }
                    }
                    targets.sort_unstable();
                    if targets.len() == 2 && targets[0] == targets[1] {
                        out.push(Rewrite::DoubleSwap(v, targets[0]));
                    }
                }
                _ => {}
            }
        }
        out
    }

    fn apply_rewrite(&mut self, rw: Rewrite) {
        match rw {
            Rewrite::Yank(cap, cup) => {
                let between = self.edges_between(cap, cup);
                if between.len() >= 2 {
                    // Closed circle: both vertices and their edges vanish.
                    self.remove_vertices(&[cap, cup], &[]);
                    return;
                }
                let bridge = between[0];
                let other_cap: Vec<usize> = self
                    .incident(cap)
                    .into_iter()
                    .filter(|ix| *ix != bridge)
                    .collect();
                let other_cup: Vec<usize> = self
                    .incident(cup)
                    .into_iter()
                    .filter(|ix| *ix != bridge)
                    .collect();
                // Straighten: the two outer ends join into one wire.
                let new_edge = match (other_cap.first(), other_cup.first()) {
                    (Some(&ea), Some(&eb)) => {
                        let pa = self.far_end(ea, cap);
                        let pb = self.far_end(eb, cup);
                        let kind = if self.edges[ea].kind == EdgeKind::Attach
                            || self.edges[eb].kind == EdgeKind::Attach
                        {
                            EdgeKind::Attach
                        } else {
                            EdgeKind::Wire
                        };
                        Some(Edge {
                            a: pa,
                            b: pb,
                            kind,
                        })
                    }
                    _ => None,
                };
                self.remove_vertices(&[cap, cup], &new_edge.into_iter().collect::<Vec<_>>());
            }
            Rewrite::DoubleSwap(s1, s2) => {
                // Trace each of s1's inputs through both crossings to find
                // the far ends, then join them directly.
                let through = |slot: usize| -> usize {
                    match slot {
                        0 => 3,
                        1 => 2,
                        2 => 1,
                        _ => 0,
                    }
                };
                let port_edge = |d: &TextDiagram, p: Port| -> Option<usize> {
                    d.edges.iter().position(|e| e.a == p || e.b == p)
                };
                let mut new_edges = Vec::new();
                for in_slot in [0usize, 1] {
                    let Some(in_edge) = port_edge(self, Port { vertex: s1, slot: in_slot }) else {
                        continue;
                    };
                    let outer_a = self.far_end(in_edge, s1);
                    let mid_slot = through(in_slot);
                    let Some(mid_edge) = port_edge(self, Port { vertex: s1, slot: mid_slot })
                    else {
                        continue;
                    };
                    let s2_in = self.far_end(mid_edge, s1);
                    let s2_out = through(s2_in.slot);
                    let Some(out_edge) = port_edge(self, Port { vertex: s2, slot: s2_out })
                    else {
                        continue;
                    };
                    let outer_b = self.far_end(out_edge, s2);
                    let kind = self.edges[in_edge].kind;
                    new_edges.push(Edge {
                        a: outer_a,
                        b: outer_b,
                        kind,
                    });
                }
                self.remove_vertices(&[s1, s2], &new_edges);
            }
        }
    }

    /// Drop the given vertices, every incident edge, and re-index, then add
    /// the replacement edges.
    fn remove_vertices(&mut self, victims: &[VertexId], new_edges: &[Edge]) {
        let mut keep = vec![true; self.vertices.len()];
        for &v in victims {
            keep[v] = false;
        }
        let mut remap = vec![usize::MAX; self.vertices.len()];
        let mut next = 0;
        for (v, k) in keep.iter().enumerate() {
            if *k {
                remap[v] = next;
                next += 1;
            }
        }
        let mut edges: Vec<Edge> = self
            .edges
            .iter()
            .filter(|e| keep[e.a.vertex] && keep[e.b.vertex])
            .copied()
            .collect();
        edges.extend(new_edges.iter().copied());
        let fix = |p: Port| Port {
            vertex: remap[p.vertex],
            slot: p.slot,
        };
        self.edges = edges
            .into_iter()
            .map(|e| Edge {
                a: fix(e.a),
                b: fix(e.b),
                kind: e.kind,
            })
            .collect();
        self.boundary_top = self
            .boundary_top
            .iter()
            .filter(|p| keep[p.vertex])
            .map(|p| fix(*p))
            .collect();
        self.boundary_bottom = self
            .boundary_bottom
            .iter()
            .filter(|p| keep[p.vertex])
            .map(|p| fix(*p))
            .collect();
        self.bubbles = self
            .bubbles
            .iter()
            .filter(|b| keep[b.owner])
            .map(|b| Bubble {
                owner: remap[b.owner],
                members: b
                    .members
                    .iter()
                    .filter(|v| keep[**v])
                    .map(|v| remap[*v])
                    .collect(),
            })
            .collect();
        let mut slots = Vec::with_capacity(next);
        for (v, k) in keep.iter().enumerate() {
            if *k {
                slots.push(self.next_slot[v]);
            }
        }
        self.next_slot = slots;
    }

    /// Exhaustively apply the two rewrite rules, lowest-index first.
    pub fn normalize(&self) -> TextDiagram {
        let mut d = self.clone();
        loop {
            let rewrites = d.applicable_rewrites();
            match rewrites.first() {
                Some(rw) => d.apply_rewrite(*rw),
                None => break,
            }
        }
        d
    }

    /// Like `normalize`, but picking the next rewrite with a seeded
    /// generator. Exists to confirm the fixpoint does not depend on order.
    pub fn normalize_seeded(&self, seed: u64) -> TextDiagram {
        let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(1);
        let mut next = move |bound: usize| -> usize {
            // xorshift64*, plenty for test shuffling
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545_F491_4F6C_DD1D) % bound as u64) as usize
        };
        let mut d = self.clone();
        loop {
            let rewrites = d.applicable_rewrites();
            if rewrites.is_empty() {
                break;
            }
            let pick = rewrites[next(rewrites.len())];
            d.apply_rewrite(pick);
        }
        d
    }
}

// ---------------------------------------------------------------------------
// Isomorphism

use crate::lexicon::Correspondence;

/// Vertex-label compatibility under a base-form correspondence.
fn labels_match(a: &VertexLabel, b: &VertexLabel, corr: &Correspondence) -> bool {
    match (a, b) {
        (VertexLabel::Gate(x), VertexLabel::Gate(y)) => x == y,
        (VertexLabel::Word(x), VertexLabel::Word(y)) => {
            x.pos == y.pos
                && x.pronoun.is_some() == y.pronoun.is_some()
                && corr.maps(&x.base, &y.base)
        }
        _ => false,
    }
}

/// Graph isomorphism between two normalized diagrams, with word labels
/// identified through `correspondence`. Backtracking search with label and
/// degree pruning; diagrams here stay small. The correspondence must be a
/// bijection covering both diagrams' words, otherwise the comparison is
/// meaningless and an error is returned.
pub fn diagrams_isomorphic(
    left: &TextDiagram,
    right: &TextDiagram,
    correspondence: &Correspondence,
) -> Result<bool, DiagramError> {
    // Precondition: total, injective, covering.
    let mut images: Vec<&str> = Vec::new();
    for base in left.word_bases() {
        let image = if correspondence.contains(&base) {
            correspondence.image(&base).unwrap()
        } else {
            return Err(DiagramError::NotBijective(base));
        };
        images.push(image);
    }
    let right_bases = right.word_bases();
    for rb in &right_bases {
        if !images.iter().any(|i| i == rb) && !correspondence.contains(rb) {
            return Err(DiagramError::NotBijective(rb.clone()));
        }
    }
    for (a, b) in correspondence.pairs() {
        for (c, d) in correspondence.pairs() {
            if a != c && b == d {
                return Err(DiagramError::NotBijective(a.to_string()));
            }
        }
    }
    if left.vertices.len() != right.vertices.len()
        || left.edges.len() != right.edges.len()
        || left.boundary_top.len() != right.boundary_top.len()
        || left.boundary_bottom.len() != right.boundary_bottom.len()
        || left.bubbles.len() != right.bubbles.len()
    {
        return Ok(false);
    }
    let n = left.vertices.len();
    // Order left vertices by candidate-set size for cheap pruning.
    let key = |d: &TextDiagram, v: VertexId| {
        let (t, b) = d.boundary_count(v);
        (d.wire_degree(v), d.attach_degree(v), t, b)
    };
    let mut order: Vec<VertexId> = (0..n).collect();
    order.sort_by_key(|&v| {
        let candidates = (0..n)
            .filter(|&w| {
                labels_match(&left.vertices[v], &right.vertices[w], correspondence)
                    && key(left, v) == key(right, w)
            })
            .count();
        (candidates, v)
    });
    let mut mapping: Vec<Option<VertexId>> = vec![None; n];
    let mut used: Vec<bool> = vec![false; n];
    let ok = assign(left, right, correspondence, &order, 0, &mut mapping, &mut used);
    Ok(ok)
}

fn adjacency_consistent(
    left: &TextDiagram,
    right: &TextDiagram,
    mapping: &[Option<VertexId>],
    v: VertexId,
    w: VertexId,
) -> bool {
    // For every already-mapped neighbor, edge multiplicity per kind must
    // agree on the right side.
    let mut counts: HashMap<(VertexId, EdgeKind), isize> = HashMap::new();
    for e in &left.edges {
        let other = if e.a.vertex == v {
            Some(e.b.vertex)
        } else if e.b.vertex == v {
            Some(e.a.vertex)
        } else {
            None
        };
        if let Some(o) = other {
            if let Some(mapped) = mapping[o] {
                *counts.entry((mapped, e.kind)).or_insert(0) += 1;
            }
        }
    }
    for e in &right.edges {
        let other = if e.a.vertex == w {
            Some(e.b.vertex)
        } else if e.b.vertex == w {
            Some(e.a.vertex)
        } else {
            None
        };
        if let Some(o) = other {
            if mapping.iter().any(|m| *m == Some(o)) {
                *counts.entry((o, e.kind)).or_insert(0) -= 1;
            }
        }
    }
    counts.values().all(|c| *c == 0)
}

fn bubbles_correspond(
    left: &TextDiagram,
    right: &TextDiagram,
    mapping: &[Option<VertexId>],
) -> bool {
    let mapped: Vec<Bubble> = left
        .bubbles
        .iter()
        .map(|b| Bubble {
            owner: mapping[b.owner].unwrap(),
            members: b.members.iter().map(|v| mapping[*v].unwrap()).collect(),
        })
        .collect();
    if mapped.len() != right.bubbles.len() {
        return false;
    }
    let mut taken = vec![false; right.bubbles.len()];
    for mb in &mapped {
        match right
            .bubbles
            .iter()
            .enumerate()
            .find(|(ix, rb)| !taken[*ix] && rb.owner == mb.owner && rb.members == mb.members)
        {
            Some((ix, _)) => taken[ix] = true,
            None => return false,
        }
    }
    true
}

fn assign(
    left: &TextDiagram,
    right: &TextDiagram,
    corr: &Correspondence,
    order: &[VertexId],
    depth: usize,
    mapping: &mut Vec<Option<VertexId>>,
    used: &mut Vec<bool>,
) -> bool {
    if depth == order.len() {
        return bubbles_correspond(left, right, mapping);
    }
    let v = order[depth];
    let lkey = {
        let (t, b) = left.boundary_count(v);
        (left.wire_degree(v), left.attach_degree(v), t, b)
    };
    for w in 0..right.vertices.len() {
        if used[w] {
            continue;
        }
        if !labels_match(&left.vertices[v], &right.vertices[w], corr) {
            continue;
        }
        let rkey = {
            let (t, b) = right.boundary_count(w);
            (right.wire_degree(w), right.attach_degree(w), t, b)
        };
        if lkey != rkey {
            continue;
        }
        if !adjacency_consistent(left, right, mapping, v, w) {
            continue;
        }
        mapping[v] = Some(w);
        used[w] = true;
        if assign(left, right, corr, order, depth + 1, mapping, used) {
            return true;
        }
        mapping[v] = None;
        used[w] = false;
    }
    false
}

// ---------------------------------------------------------------------------
// Tree to diagram

/// A resolved free pronoun: which leaf refers back to which earlier leaf.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PronounResolution {
    pub sentence: usize,
    pub path: TreePath,
    pub antecedent_sentence: usize,
    pub antecedent_path: TreePath,
}

struct TreeBuilder<'g> {
    d: TextDiagram,
    grammar: &'g Grammar,
    clause: usize,
    vertex_at: HashMap<TreePath, VertexId>,
    token_ix: usize,
}

impl<'g> TreeBuilder<'g> {
    fn word(&mut self, leaf: &Leaf, path: &TreePath) -> VertexId {
        let v = self.d.add_word(WordInfo {
            surface: leaf.surface.clone(),
            lang: leaf.lang,
            base: leaf.base.clone(),
            en_base: leaf.en_base.clone(),
            bn_base: leaf.bn_base.clone(),
            pos: leaf.cat,
            clause: self.clause,
            pronoun: leaf.pronoun,
            stripped: leaf.stripped.clone(),
            entry_attrs: leaf.entry_attrs,
            attrs: leaf.attrs,
            gender_agreeing: leaf.gender_agreeing,
            one_sided: leaf.one_sided,
            token_ix: self.token_ix,
        });
        self.token_ix += 1;
        self.vertex_at.insert(path.clone(), v);
        v
    }

    fn leaf_of<'t>(&self, t: &'t ParseTree) -> Result<&'t Leaf, DiagramError> {
        match &t.node {
            Node::Leaf(l) => Ok(l),
            _ => Err(DiagramError::UnsupportedConstruct(
                "expected a terminal leaf".into(),
            )),
        }
    }

    /// Noun-phrase subtree: returns the vertex the clause wires attach to.
    fn build_np(&mut self, t: &ParseTree, path: &TreePath) -> Result<VertexId, DiagramError> {
        let sub = |path: &TreePath, i: usize| {
            let mut p = path.clone();
            p.push(i);
            p
        };
        match &t.node {
            Node::Leaf(l) => Ok(self.word(l, path)),
            Node::Rule { rule, .. } => {
                let rule = self.grammar.rule(rule).ok_or_else(|| {
                    DiagramError::UnsupportedConstruct("unknown rule".into())
                })?;
                match clause_shape(rule) {
                    Some(ClauseShape::AttributiveAdjective { adj, np }) => {
                        let adj_leaf = self.leaf_of(&t.children[adj])?.clone();
                        let adj_v = self.word(&adj_leaf, &sub(path, adj));
                        let head = self.build_np(&t.children[np], &sub(path, np))?;
                        self.d.connect(adj_v, head, EdgeKind::Wire);
                        Ok(head)
                    }
                    Some(ClauseShape::NounConjunction { left, cnj, right }) => {
                        let before = self.d.vertex_count();
                        let h1 = self.build_np(&t.children[left], &sub(path, left))?;
                        let mid = self.d.vertex_count();
                        let cnj_leaf = self.leaf_of(&t.children[cnj])?.clone();
                        let cnj_v = self.word(&cnj_leaf, &sub(path, cnj));
                        let h2 = self.build_np(&t.children[right], &sub(path, right))?;
                        let after = self.d.vertex_count();
                        self.d.connect(cnj_v, h1, EdgeKind::Wire);
                        self.d.connect(cnj_v, h2, EdgeKind::Wire);
                        let left_members: BTreeSet<VertexId> = (before..mid).collect();
                        let right_members: BTreeSet<VertexId> =
                            (mid + 1..after).collect();
                        self.d.add_bubble(cnj_v, left_members);
                        self.d.add_bubble(cnj_v, right_members);
                        Ok(cnj_v)
                    }
                    _ => Err(DiagramError::UnsupportedConstruct(format!(
                        "rule {} inside a noun phrase",
                        rule.id
                    ))),
                }
            }
            // Relative-marker wrapper from a resumptive merge: the head is
            // the wrapped noun, the marker rides along as a pronoun vertex.
            Node::Link { kind: LinkKind::RelativeResumptive, .. } => {
                let head = self.build_np(&t.children[0], &sub(path, 0))?;
                let marker = self.leaf_of(&t.children[1])?.clone();
                self.word(&marker, &sub(path, 1));
                Ok(head)
            }
            Node::Link { .. } => Err(DiagramError::UnsupportedConstruct(
                "unexpected link node inside a noun phrase".into(),
            )),
        }
    }

    /// Verb-phrase subtree: returns the verb vertex; adverbs attach here.
    fn build_vp(&mut self, t: &ParseTree, path: &TreePath) -> Result<VertexId, DiagramError> {
        match &t.node {
            Node::Leaf(l) => Ok(self.word(l, path)),
            Node::Rule { rule, .. } => {
                let rule = self.grammar.rule(rule).ok_or_else(|| {
                    DiagramError::UnsupportedConstruct("unknown rule".into())
                })?;
                match clause_shape(rule) {
                    Some(ClauseShape::AdverbPhrase { adv, vp }) => {
                        // Preserve surface order of vertices.
                        let (first, second) = if adv < vp { (adv, vp) } else { (vp, adv) };
                        let mut sub = path.clone();
                        sub.push(first);
                        let first_v = if first == adv {
                            let leaf = self.leaf_of(&t.children[adv])?.clone();
                            self.word(&leaf, &sub)
                        } else {
                            self.build_vp(&t.children[vp], &sub)?
                        };
                        let mut sub2 = path.clone();
                        sub2.push(second);
                        let second_v = if second == adv {
                            let leaf = self.leaf_of(&t.children[adv])?.clone();
                            self.word(&leaf, &sub2)
                        } else {
                            self.build_vp(&t.children[vp], &sub2)?
                        };
                        let (adv_v, verb_v) = if first == adv {
                            (first_v, second_v)
                        } else {
                            (second_v, first_v)
                        };
                        self.d.connect(adv_v, verb_v, EdgeKind::Attach);
                        Ok(verb_v)
                    }
                    _ => Err(DiagramError::UnsupportedConstruct(format!(
                        "rule {} inside a verb phrase",
                        rule.id
                    ))),
                }
            }
            Node::Link { .. } => Err(DiagramError::UnsupportedConstruct(
                "link node inside a verb phrase".into(),
            )),
        }
    }

    /// Clause or compound: returns the main process vertex of the clause
    /// (for attachments from conjunctions and complement verbs).
    fn build_clause(&mut self, t: &ParseTree, path: &TreePath) -> Result<VertexId, DiagramError> {
        let sub = |path: &TreePath, i: usize| {
            let mut p = path.clone();
            p.push(i);
            p
        };
        match &t.node {
            Node::Link { kind, .. } => match kind {
                LinkKind::RelativeSubject
                | LinkKind::RelativeObject
                | LinkKind::RelativeResumptive
                | LinkKind::Personal => {
                    let main = self.build_clause(&t.children[0], &sub(path, 0))?;
                    self.clause += 1;
                    self.build_clause(&t.children[1], &sub(path, 1))?;
                    Ok(main)
                }
                LinkKind::Reflexive => Err(DiagramError::UnsupportedConstruct(
                    "reflexive link as a clause".into(),
                )),
            },
            Node::Rule { rule, .. } => {
                let rule_ref = self.grammar.rule(rule).ok_or_else(|| {
                    DiagramError::UnsupportedConstruct("unknown rule".into())
                })?;
                let shape = clause_shape(rule_ref).ok_or_else(|| {
                    DiagramError::UnsupportedConstruct(format!("rule {}", rule_ref.id))
                })?;
                match shape {
                    ClauseShape::Transitive { subj, verb, obj } => {
                        let s = self.build_np(&t.children[subj], &sub(path, subj))?;
                        let (o, v) = if obj < verb {
                            let o = self.build_np(&t.children[obj], &sub(path, obj))?;
                            let v = self.build_vp(&t.children[verb], &sub(path, verb))?;
                            (o, v)
                        } else {
                            let v = self.build_vp(&t.children[verb], &sub(path, verb))?;
                            let o = self.build_np(&t.children[obj], &sub(path, obj))?;
                            (o, v)
                        };
                        self.d.connect(v, s, EdgeKind::Wire);
                        self.d.connect(v, o, EdgeKind::Wire);
                        Ok(v)
                    }
                    ClauseShape::Intransitive { subj, verb } => {
                        let s = self.build_np(&t.children[subj], &sub(path, subj))?;
                        let v = self.build_vp(&t.children[verb], &sub(path, verb))?;
                        self.d.connect(v, s, EdgeKind::Wire);
                        Ok(v)
                    }
                    ClauseShape::Predication { subj, adj, copula } => {
                        let s = self.build_np(&t.children[subj], &sub(path, subj))?;
                        let cop = match copula {
                            Some(c) => {
                                let leaf = self.leaf_of(&t.children[c])?.clone();
                                Some(self.word(&leaf, &sub(path, c)))
                            }
                            None => None,
                        };
                        let a_leaf = self.leaf_of(&t.children[adj])?.clone();
                        let a = self.word(&a_leaf, &sub(path, adj));
                        self.d.connect(a, s, EdgeKind::Wire);
                        if let Some(c) = cop {
                            self.d.connect(c, s, EdgeKind::Wire);
                            self.d.connect(c, a, EdgeKind::Attach);
                        }
                        Ok(a)
                    }
                    ClauseShape::Ditransitive {
                        subj,
                        verb,
                        obj,
                        recipient,
                        adp,
                    } => {
                        // Build in surface order to keep token indices right.
                        let mut order: Vec<usize> = vec![subj, verb, obj, recipient];
                        if let Some(a) = adp {
                            order.push(a);
                        }
                        order.sort_unstable();
                        let mut built: HashMap<usize, VertexId> = HashMap::new();
                        for ix in order {
                            let v = if ix == verb {
                                self.build_vp(&t.children[ix], &sub(path, ix))?
                            } else if Some(ix) == adp {
                                let leaf = self.leaf_of(&t.children[ix])?.clone();
                                self.word(&leaf, &sub(path, ix))
                            } else {
                                self.build_np(&t.children[ix], &sub(path, ix))?
                            };
                            built.insert(ix, v);
                        }
                        let (s, v, o, r) = (
                            built[&subj],
                            built[&verb],
                            built[&obj],
                            built[&recipient],
                        );
                        self.d.connect(v, s, EdgeKind::Wire);
                        self.d.connect(v, o, EdgeKind::Wire);
                        match adp {
                            Some(a) => {
                                let adp_v = built[&a];
                                self.d.connect(adp_v, r, EdgeKind::Wire);
                                self.d.connect(adp_v, o, EdgeKind::Wire);
                                self.d.connect(adp_v, v, EdgeKind::Attach);
                            }
                            None => {
                                // Silent postposition: the case-marked
                                // recipient attaches to the verb directly.
                                self.d.connect(r, v, EdgeKind::Attach);
                            }
                        }
                        Ok(v)
                    }
                    ClauseShape::Oblique {
                        subj,
                        verb,
                        adp,
                        oblique,
                    } => {
                        let s = self.build_np(&t.children[subj], &sub(path, subj))?;
                        let v = self.build_vp(&t.children[verb], &sub(path, verb))?;
                        let adp_leaf = self.leaf_of(&t.children[adp])?.clone();
                        let adp_v = self.word(&adp_leaf, &sub(path, adp));
                        let o = self.build_np(&t.children[oblique], &sub(path, oblique))?;
                        self.d.connect(v, s, EdgeKind::Wire);
                        self.d.connect(adp_v, o, EdgeKind::Wire);
                        self.d.connect(adp_v, s, EdgeKind::Wire);
                        self.d.connect(adp_v, v, EdgeKind::Attach);
                        Ok(v)
                    }
                    ClauseShape::Complement { subj, scv, clause } => {
                        let mut pieces: Vec<usize> = vec![subj, scv, clause];
                        pieces.sort_unstable();
                        let outer = self.clause;
                        let mut after_inner = outer;
                        let mut built: HashMap<usize, VertexId> = HashMap::new();
                        let mut inner_members: BTreeSet<VertexId> = BTreeSet::new();
                        for ix in pieces {
                            if ix == clause {
                                self.clause = outer + 1;
                                let before = self.d.vertex_count();
                                let inner =
                                    self.build_clause(&t.children[ix], &sub(path, ix))?;
                                inner_members = (before..self.d.vertex_count()).collect();
                                after_inner = self.clause;
                                self.clause = outer;
                                built.insert(ix, inner);
                            } else if ix == scv {
                                let leaf = self.leaf_of(&t.children[ix])?.clone();
                                built.insert(ix, self.word(&leaf, &sub(path, ix)));
                            } else {
                                built.insert(ix, self.build_np(&t.children[ix], &sub(path, ix))?);
                            }
                        }
                        self.clause = after_inner;
                        let scv_v = built[&scv];
                        self.d.connect(scv_v, built[&subj], EdgeKind::Wire);
                        self.d.connect(scv_v, built[&clause], EdgeKind::Attach);
                        self.d.add_bubble(scv_v, inner_members);
                        Ok(scv_v)
                    }
                    ClauseShape::ClauseConjunction { left, cnj, right } => {
                        let lb = self.d.vertex_count();
                        let lv = self.build_clause(&t.children[left], &sub(path, left))?;
                        let le = self.d.vertex_count();
                        let cnj_leaf = self.leaf_of(&t.children[cnj])?.clone();
                        self.clause += 1;
                        let cnj_v = self.word(&cnj_leaf, &sub(path, cnj));
                        self.clause += 1;
                        let rb = self.d.vertex_count();
                        let rv = self.build_clause(&t.children[right], &sub(path, right))?;
                        let re = self.d.vertex_count();
                        self.d.connect(cnj_v, lv, EdgeKind::Attach);
                        self.d.connect(cnj_v, rv, EdgeKind::Attach);
                        self.d.add_bubble(cnj_v, (lb..le).collect());
                        self.d.add_bubble(cnj_v, (rb..re).collect());
                        Ok(cnj_v)
                    }
                    _ => Err(DiagramError::UnsupportedConstruct(format!(
                        "rule {} as a clause",
                        rule_ref.id
                    ))),
                }
            }
            Node::Leaf(_) => Err(DiagramError::UnsupportedConstruct(
                "bare leaf as a clause".into(),
            )),
        }
    }
}

/// Noun vertices that stand for participants (everything of category NP).
fn noun_vertices(d: &TextDiagram) -> Vec<VertexId> {
    d.vertices
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l.word(), Some(w) if w.pos == Some(Category::Np)))
        .map(|(v, _)| v)
        .collect()
}

/// Wire pronoun links and repeated nouns across clauses, then open one
/// boundary wire per participant. Called once per tree and once more after
/// text-level composition.
fn finish_participants(d: &mut TextDiagram) {
    let nouns = noun_vertices(d);
    // Union-find over noun vertices.
    let mut parent: HashMap<VertexId, VertexId> = nouns.iter().map(|v| (*v, *v)).collect();
    fn find(parent: &mut HashMap<VertexId, VertexId>, v: VertexId) -> VertexId {
        let p = parent[&v];
        if p == v {
            v
        } else {
            let r = find(parent, p);
            parent.insert(v, r);
            r
        }
    }
    let mut union = |parent: &mut HashMap<VertexId, VertexId>, a: VertexId, b: VertexId| {
        let ra = find(parent, a);
        let rb = find(parent, b);
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent.insert(hi, lo);
        }
    };
    // Existing noun-to-noun wires (pronoun links) join classes.
    for e in d.edges.clone() {
        if e.kind == EdgeKind::Wire
            && nouns.contains(&e.a.vertex)
            && nouns.contains(&e.b.vertex)
        {
            union(&mut parent, e.a.vertex, e.b.vertex);
        }
    }
    // Repeated plain nouns across clauses chain together.
    let mut by_base: HashMap<String, Vec<VertexId>> = HashMap::new();
    for &v in &nouns {
        let w = d.vertices[v].word().unwrap();
        if w.pronoun.is_none() {
            by_base.entry(w.base.clone()).or_default().push(v);
        }
    }
    let mut bases: Vec<&String> = by_base.keys().collect();
    bases.sort();
    for base in bases {
        let mentions = &by_base[base];
        for pair in mentions.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let (ca, cb) = (
                d.vertices[a].word().unwrap().clause,
                d.vertices[b].word().unwrap().clause,
            );
            if ca != cb && find(&mut parent, a) != find(&mut parent, b) {
                d.connect(a, b, EdgeKind::Wire);
                union(&mut parent, a, b);
            }
        }
    }
    // One open wire per class: top on the first mention, bottom on the last.
    let mut classes: HashMap<VertexId, Vec<VertexId>> = HashMap::new();
    for &v in &nouns {
        let root = find(&mut parent, v);
        classes.entry(root).or_default().push(v);
    }
    let mut roots: Vec<VertexId> = classes.keys().copied().collect();
    roots.sort_unstable();
    for root in roots {
        let members = &classes[&root];
        let first = *members.iter().min().unwrap();
        let last = *members.iter().max().unwrap();
        d.open_top(first);
        d.open_bottom(last);
    }
}

/// Diagram of a single (possibly compound) tree.
pub fn tree_to_diagram(tree: &ParseTree, grammar: &Grammar) -> Result<TextDiagram, DiagramError> {
    let (d, _) = tree_to_diagram_with_paths(tree, grammar)?;
    Ok(d)
}

pub(crate) fn tree_to_diagram_with_paths(
    tree: &ParseTree,
    grammar: &Grammar,
) -> Result<(TextDiagram, HashMap<TreePath, VertexId>), DiagramError> {
    let (d, paths, _) = tree_diagram_parts(tree, grammar)?;
    Ok((d, paths))
}

fn tree_diagram_parts(
    tree: &ParseTree,
    grammar: &Grammar,
) -> Result<(TextDiagram, HashMap<TreePath, VertexId>, usize), DiagramError> {
    let mut b = TreeBuilder {
        d: TextDiagram::new(),
        grammar,
        clause: 0,
        vertex_at: HashMap::new(),
        token_ix: 0,
    };
    b.build_clause(tree, &Vec::new())?;
    // Pronominal link annotations become wires to their antecedents.
    let mut link_edges: Vec<(VertexId, VertexId)> = Vec::new();
    for (path, leaf) in tree.leaves() {
        if let Some(ann) = &leaf.link {
            let from = b.vertex_at[&path];
            let to = *b
                .vertex_at
                .get(&ann.antecedent)
                .ok_or_else(|| DiagramError::UnsupportedConstruct("dangling link".into()))?;
            link_edges.push((from, to));
        }
    }
    for (from, to) in link_edges {
        b.d.connect(from, to, EdgeKind::Wire);
    }
    let clause_count = b.clause + 1;
    let mut d = b.d;
    finish_participants(&mut d);
    Ok((d, b.vertex_at, clause_count))
}

/// Diagram of a whole text: per-sentence diagrams composed sequentially,
/// plugged on repeated nouns and resolved pronouns.
pub fn text_to_diagram(
    trees: &[ParseTree],
    grammar: &Grammar,
    resolutions: &[PronounResolution],
) -> Result<TextDiagram, DiagramError> {
    text_to_diagram_with_clauses(trees, grammar, resolutions).map(|(d, _)| d)
}

/// As `text_to_diagram`, also reporting each sentence's first clause index.
pub fn text_to_diagram_with_clauses(
    trees: &[ParseTree],
    grammar: &Grammar,
    resolutions: &[PronounResolution],
) -> Result<(TextDiagram, Vec<usize>), DiagramError> {
    let mut clause_starts = Vec::with_capacity(trees.len());
    let mut composed: Option<TextDiagram> = None;
    let mut offsets: Vec<usize> = Vec::new();
    let mut path_maps: Vec<HashMap<TreePath, VertexId>> = Vec::new();
    let mut clause_offset = 0;
    for (s_ix, tree) in trees.iter().enumerate() {
        let (mut d, paths, clause_count) = tree_diagram_parts(tree, grammar)?;
        // Re-tag clause indices so clause order follows sentence order.
        for v in d.vertices.iter_mut() {
            if let VertexLabel::Word(w) = v {
                w.clause += clause_offset;
            }
        }
        clause_starts.push(clause_offset);
        clause_offset += clause_count;
        match composed {
            None => {
                offsets.push(0);
                path_maps.push(paths);
                composed = Some(d);
            }
            Some(above) => {
                // Plug repeated nouns: below-top participants whose base
                // already has an open bottom wire above.
                let mut plugging = Vec::new();
                let mut taken = vec![false; above.boundary_bottom.len()];
                for (t_ix, tp) in d.boundary_top.iter().enumerate() {
                    let below_word = d.vertices[tp.vertex].word().unwrap();
                    let target = above.boundary_bottom.iter().enumerate().find(|(b_ix, bp)| {
                        if taken[*b_ix] {
                            return false;
                        }
                        let above_word = above.vertices[bp.vertex].word().unwrap();
                        below_word.pronoun.is_none() && above_word.base == below_word.base
                    });
                    if let Some((b_ix, _)) = target {
                        taken[b_ix] = true;
                        plugging.push((t_ix, b_ix));
                    }
                }
                // Plug resolved pronouns onto their antecedent's wire.
                for r in resolutions.iter().filter(|r| r.sentence == s_ix) {
                    let Some(&pv) = paths.get(&r.path) else { continue };
                    let Some(t_ix) = d.boundary_top.iter().position(|p| p.vertex == pv) else {
                        continue;
                    };
                    if plugging.iter().any(|(t, _)| *t == t_ix) {
                        continue;
                    }
                    let av = offsets[r.antecedent_sentence]
                        + path_maps[r.antecedent_sentence][&r.antecedent_path];
                    // The antecedent's class owns some open bottom wire.
                    let b_ix = above
                        .boundary_bottom
                        .iter()
                        .enumerate()
                        .find(|(ix, bp)| !taken[*ix] && same_class(&above, bp.vertex, av))
                        .map(|(ix, _)| ix);
                    if let Some(b_ix) = b_ix {
                        taken[b_ix] = true;
                        plugging.push((t_ix, b_ix));
                    }
                }
                offsets.push(above.vertex_count());
                path_maps.push(paths);
                composed = Some(compose_sequential(&above, &d, &plugging)?);
            }
        }
    }
    Ok((composed.unwrap_or_default(), clause_starts))
}

/// Whether two noun vertices sit on the same participant wire.
fn same_class(d: &TextDiagram, a: VertexId, b: VertexId) -> bool {
    if a == b {
        return true;
    }
    let nouns = noun_vertices(d);
    let mut stack = vec![a];
    let mut seen = BTreeSet::new();
    seen.insert(a);
    while let Some(v) = stack.pop() {
        for e in d.edges() {
            if e.kind != EdgeKind::Wire {
                continue;
            }
            let other = if e.a.vertex == v {
                e.b.vertex
            } else if e.b.vertex == v {
                e.a.vertex
            } else {
                continue;
            };
            if nouns.contains(&other) && seen.insert(other) {
                if other == b {
                    return true;
                }
                stack.push(other);
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::{load_grammar, merge_pronominal, parse};
    use crate::lexicon::Lexicon;

    fn fixtures() -> (Grammar, Grammar, Lexicon) {
        let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../..");
        let en = load_grammar(
            Lang::En,
            &std::fs::read_to_string(format!("{dir}/grammars/en.gr")).unwrap(),
        )
        .unwrap();
        let bn = load_grammar(
            Lang::Bn,
            &std::fs::read_to_string(format!("{dir}/grammars/bn.gr")).unwrap(),
        )
        .unwrap();
        let lex = Lexicon::load(
            &std::fs::read_to_string(format!("{dir}/lexicon/en-bn.tsv")).unwrap(),
        )
        .unwrap();
        (en, bn, lex)
    }

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn transitive_verb_has_two_wires() {
        let (_, bn, lex) = fixtures();
        let tree = parse(&bn, &toks("Millie bhāta khāẏa"), &lex).unwrap();
        let d = tree_to_diagram(&tree, &bn).unwrap();
        let verb = d
            .vertices()
            .iter()
            .position(|v| matches!(v.word(), Some(w) if w.pos == Some(Category::Tvp)))
            .unwrap();
        assert_eq!(d.wire_degree(verb), 2);
        assert_eq!(d.boundary_top().len(), 2);
        assert_eq!(d.boundary_bottom().len(), 2);
    }

    #[test]
    fn intransitive_verb_has_one_wire() {
        let (en, _, lex) = fixtures();
        let tree = parse(&en, &toks("Millie sleeps"), &lex).unwrap();
        let d = tree_to_diagram(&tree, &en).unwrap();
        let verb = d
            .vertices()
            .iter()
            .position(|v| matches!(v.word(), Some(w) if w.pos == Some(Category::Ivp)))
            .unwrap();
        assert_eq!(d.wire_degree(verb), 1);
        assert_eq!(d.boundary_top().len(), 1);
    }

    #[test]
    fn compound_joins_on_shared_wire() {
        let (_, bn, lex) = fixtures();
        let t1 = parse(&bn, &toks("Millie Billiekē bhālōbāsē"), &lex).unwrap();
        let t2 = parse(&bn, &toks("Billie sudarśana"), &lex).unwrap();
        let merged = merge_pronominal(&t1, &t2, LinkKind::RelativeSubject, &bn, &lex).unwrap();
        let d = tree_to_diagram(&merged, &bn).unwrap();
        // Participants: Millie and the shared Billie wire.
        assert_eq!(d.boundary_top().len(), 2);
        // The relative pronoun vertex is wired to its antecedent.
        let ye = d
            .vertices()
            .iter()
            .position(|v| matches!(v.word(), Some(w) if w.surface == "yē"))
            .unwrap();
        assert_eq!(d.wire_degree(ye), 2, "clause wire plus antecedent wire");
    }

    #[test]
    fn word_vertices_are_exactly_the_leaves() {
        let (en, _, lex) = fixtures();
        let tree = parse(&en, &toks("Millie gives chocolate to Billie"), &lex).unwrap();
        let d = tree_to_diagram(&tree, &en).unwrap();
        assert_eq!(
            d.word_surfaces(),
            toks("Millie gives chocolate to Billie")
        );
        // The adposition carries two wires plus the verb attachment.
        let adp = d
            .vertices()
            .iter()
            .position(|v| matches!(v.word(), Some(w) if w.pos == Some(Category::Adp)))
            .unwrap();
        assert_eq!(d.wire_degree(adp), 2);
        assert_eq!(d.attach_degree(adp), 1);
    }

    #[test]
    fn compose_plugs_and_concatenates() {
        let (en, _, lex) = fixtures();
        let d1 = tree_to_diagram(&parse(&en, &toks("Millie sleeps"), &lex).unwrap(), &en).unwrap();
        let d2 = tree_to_diagram(&parse(&en, &toks("Millie runs"), &lex).unwrap(), &en).unwrap();
        let out = compose_sequential(&d1, &d2, &[(0, 0)]).unwrap();
        assert_eq!(out.boundary_top().len(), 1);
        assert_eq!(out.boundary_bottom().len(), 1);
        assert_eq!(out.vertex_count(), 4);
        // Plugging an absent port is refused.
        assert_eq!(
            compose_sequential(&d1, &d2, &[(3, 0)]),
            Err(DiagramError::DanglingPlug(3))
        );
    }

    #[test]
    fn normalize_straightens_s_bend() {
        let (en, _, lex) = fixtures();
        let plain =
            tree_to_diagram(&parse(&en, &toks("Millie sleeps"), &lex).unwrap(), &en).unwrap();
        let mut bent = plain.clone();
        bent.insert_s_bend(0);
        assert_eq!(bent.vertex_count(), plain.vertex_count() + 2);
        let normd = bent.normalize();
        assert_eq!(normd.vertex_count(), plain.vertex_count());
        let corr = Correspondence::identity(plain.word_bases());
        assert!(diagrams_isomorphic(&normd, &plain, &corr).unwrap());
    }

    #[test]
    fn normalize_cancels_double_swap() {
        let (en, _, lex) = fixtures();
        let plain = tree_to_diagram(
            &parse(&en, &toks("Millie eats rice"), &lex).unwrap(),
            &en,
        )
        .unwrap();
        let mut crossed = plain.clone();
        crossed.insert_double_swap(0, 1);
        let normd = crossed.normalize();
        let corr = Correspondence::identity(plain.word_bases());
        assert!(diagrams_isomorphic(&normd, &plain, &corr).unwrap());
    }

    #[test]
    fn normalize_removes_circles_and_is_idempotent() {
        let (en, _, lex) = fixtures();
        let mut d =
            tree_to_diagram(&parse(&en, &toks("Millie sleeps"), &lex).unwrap(), &en).unwrap();
        d.insert_circle();
        d.insert_s_bend(0);
        let n1 = d.normalize();
        let n2 = n1.normalize();
        assert_eq!(n1, n2);
        assert_eq!(n1.vertex_count(), 2);
    }

    #[test]
    fn already_normal_diagram_unchanged() {
        let (en, _, lex) = fixtures();
        let d = tree_to_diagram(&parse(&en, &toks("Millie eats rice"), &lex).unwrap(), &en)
            .unwrap();
        assert_eq!(d.normalize(), d);
    }

    #[test]
    fn paper_transitive_pair_is_isomorphic() {
        let (en, bn, lex) = fixtures();
        let de = tree_to_diagram(&parse(&en, &toks("Millie eats rice"), &lex).unwrap(), &en)
            .unwrap()
            .normalize();
        let db = tree_to_diagram(
            &parse(&bn, &toks("Millie bhāta khāẏa"), &lex).unwrap(),
            &bn,
        )
        .unwrap()
        .normalize();
        let corr = match lex.check_bijection(
            &toks("Millie eats rice"),
            &toks("Millie bhāta khāẏa"),
        ) {
            crate::lexicon::BijectionOutcome::Bijective(c) => c,
            other => panic!("expected bijection, got {other:?}"),
        };
        assert!(diagrams_isomorphic(&de, &db, &corr).unwrap());
    }

    #[test]
    fn copula_pair_is_not_bijective() {
        let (en, bn, lex) = fixtures();
        let de = tree_to_diagram(
            &parse(&en, &toks("Billie is handsome"), &lex).unwrap(),
            &en,
        )
        .unwrap()
        .normalize();
        let db = tree_to_diagram(
            &parse(&bn, &toks("Billie sudarśana"), &lex).unwrap(),
            &bn,
        )
        .unwrap()
        .normalize();
        // Build the best correspondence the lexicon offers; `is` stays out.
        let corr = Correspondence::new(vec![
            ("Billie".to_string(), "Billie".to_string()),
            ("handsome".to_string(), "sudarśana".to_string()),
        ]);
        assert_eq!(
            diagrams_isomorphic(&de, &db, &corr),
            Err(DiagramError::NotBijective("is".into()))
        );
    }

    #[test]
    fn isomorphism_is_reflexive() {
        let (en, _, lex) = fixtures();
        let d = tree_to_diagram(
            &parse(&en, &toks("Millie gives chocolate to Billie"), &lex).unwrap(),
            &en,
        )
        .unwrap()
        .normalize();
        let corr = Correspondence::identity(d.word_bases());
        assert!(diagrams_isomorphic(&d, &d, &corr).unwrap());
    }

    #[test]
    fn non_isomorphic_when_structure_differs() {
        let (en, _, lex) = fixtures();
        let d1 = tree_to_diagram(&parse(&en, &toks("Millie eats rice"), &lex).unwrap(), &en)
            .unwrap()
            .normalize();
        let d2 = tree_to_diagram(&parse(&en, &toks("Millie quickly runs"), &lex).unwrap(), &en)
            .unwrap()
            .normalize();
        let corr = Correspondence::new(vec![
            ("Millie".to_string(), "Millie".to_string()),
            ("eats".to_string(), "runs".to_string()),
            ("rice".to_string(), "quickly".to_string()),
        ]);
        assert_eq!(diagrams_isomorphic(&d1, &d2, &corr).ok(), Some(false));
    }
}
