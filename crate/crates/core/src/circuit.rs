//! Text-circuit IR: one wire per noun participant, boxes for the processes
//! acting on them, adposition frames nesting the verb they modify, and
//! update nodes recording inferred attributes on a wire.
//!
//! Circuit equality is connectivity up to a permutation of the noun wires
//! and a translation of the terminal symbols; update nodes only count in
//! the attribute-sensitive mode.

use std::collections::HashMap;

use thiserror::Error;

use crate::diagram::{EdgeKind, TextDiagram, VertexId, WordInfo};
use crate::grammar::{Category, Lang};
use crate::lexicon::{
    Animacy, AttrAssign, AttributeConflict, Correspondence, Gender, Honorific, Marker,
    NounAttributes, PronounKind,
};

#[derive(Debug, Clone, PartialEq)]
pub struct NounWire {
    /// Base form in the circuit's language.
    pub base: String,
    pub surface: String,
    pub en_base: Option<String>,
    pub bn_base: Option<String>,
    pub attrs: NounAttributes,
    pub initial_attrs: NounAttributes,
    pub intro_clause: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxKind {
    Verb,
    Adjective,
    AdpositionFrame,
    ConjunctionFrame,
}

/// A wire occurrence in a box's operand list; remembers whether the
/// mention in the source text was a pronoun (and which kind).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Operand {
    pub wire: usize,
    pub pronoun: Option<PronounKind>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdverbMod {
    pub base: String,
    pub surface: String,
    pub en_base: Option<String>,
    pub bn_base: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessBox {
    pub kind: BoxKind,
    pub base: String,
    pub surface: String,
    pub en_base: Option<String>,
    pub bn_base: Option<String>,
    /// Operand wires in role order: subject first, direct object second,
    /// a frame's extra participant (recipient or oblique) last.
    pub operands: Vec<Operand>,
    pub nested: Option<Box<ProcessBox>>,
    pub adverbs: Vec<AdverbMod>,
    /// Adjective boxes: predicative rather than attributive use.
    pub predicative: bool,
    pub clause: usize,
    pub seq: usize,
}

impl ProcessBox {
    /// The box the frame ultimately wraps (itself when not a frame).
    pub fn innermost(&self) -> &ProcessBox {
        match &self.nested {
            Some(inner) => inner.innermost(),
            None => self,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateNode {
    pub wire: usize,
    pub assign: AttrAssign,
    pub label: String,
    pub clause: usize,
    pub seq: usize,
}

/// An inferred attribute refinement, before it is applied to the circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateEvent {
    pub wire: usize,
    pub assign: AttrAssign,
    pub label: String,
    pub clause: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("pronoun `{0}` has no antecedent wire")]
    UnresolvedPronoun(String),
    #[error("correspondence check failed for `{0}`")]
    ConditionFailed(String),
    #[error(transparent)]
    AttributeConflict(#[from] AttributeConflict),
}

/// Inference inputs harvested from one clause.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct ClauseMeta {
    pub clause: usize,
    /// Case markers stripped from noun mentions, in token order.
    pub strips: Vec<(usize, Marker)>,
    /// Pronoun mentions: wire, the mention's own attributes, kind.
    pub pronouns: Vec<(usize, NounAttributes, PronounKind)>,
    /// Adjective mentions: wire, agreement capability, suffixed form,
    /// predicative use, copula present, subject was a personal pronoun.
    pub adjectives: Vec<AdjMeta>,
    /// Verb agreement marker: subject wire and the honorific it encodes.
    pub verb_honorific: Option<(usize, Honorific)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AdjMeta {
    pub wire: usize,
    pub gender_agreeing: bool,
    pub suffixed: bool,
    pub predicative: bool,
    pub copula: bool,
    pub subject_pronoun: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextCircuit {
    pub lang: Lang,
    pub wires: Vec<NounWire>,
    pub boxes: Vec<ProcessBox>,
    pub updates: Vec<UpdateNode>,
    pub clause_count: usize,
    /// Source sentence of each clause; identity unless a pipeline sets it.
    pub clause_sentence: Vec<usize>,
    pub(crate) meta: Vec<ClauseMeta>,
    next_seq: usize,
}

/// Items on one wire, in circuit order (top to bottom).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainItem {
    Box(usize),
    Update(usize),
}

impl TextCircuit {
    pub fn wire_by_base(&self, base: &str) -> Option<usize> {
        self.wires.iter().position(|w| w.base == base)
    }

    /// Boxes and update nodes touching a wire, ordered top to bottom.
    pub fn chain(&self, wire: usize, with_updates: bool) -> Vec<ChainItem> {
        let mut items: Vec<(usize, ChainItem)> = Vec::new();
        for (ix, b) in self.boxes.iter().enumerate() {
            if b.operands.iter().any(|o| o.wire == wire) {
                items.push((b.seq, ChainItem::Box(ix)));
            }
        }
        if with_updates {
            for (ix, u) in self.updates.iter().enumerate() {
                if u.wire == wire {
                    items.push((u.seq, ChainItem::Update(ix)));
                }
            }
        }
        items.sort_by_key(|(seq, _)| *seq);
        items.into_iter().map(|(_, item)| item).collect()
    }

    fn push_update(&mut self, wire: usize, assign: AttrAssign, label: String, clause: usize) {
        let seq = clause * 1000 + self.updates.iter().filter(|u| u.clause == clause).count();
        self.updates.push(UpdateNode {
            wire,
            assign,
            label,
            clause,
            seq,
        });
    }

    /// Apply an inferred event at its clause position, refining the wire.
    pub fn apply_event(&mut self, ev: &UpdateEvent) -> Result<bool, AttributeConflict> {
        let changed = self.wires[ev.wire].attrs.refine(ev.assign)?;
        if changed {
            self.push_update(ev.wire, ev.assign, ev.label.clone(), ev.clause);
        }
        Ok(changed)
    }
}

/// Append an attribute update at the current end of a wire. Re-applying an
/// assignment the wire already satisfies returns the circuit unchanged;
/// contradicting a concrete value is an error.
pub fn apply_update(
    circuit: &TextCircuit,
    wire: usize,
    assign: AttrAssign,
) -> Result<TextCircuit, AttributeConflict> {
    let mut out = circuit.clone();
    if out.wires[wire].attrs.satisfies(assign) {
        return Ok(out);
    }
    out.wires[wire].attrs.refine(assign)?;
    let seq = out.next_seq;
    out.next_seq += 1;
    out.updates.push(UpdateNode {
        wire,
        assign,
        label: assign.to_string(),
        clause: out.clause_count.saturating_sub(1),
        seq,
    });
    Ok(out)
}

// ---------------------------------------------------------------------------
// Construction from a text diagram

struct WireTable {
    /// vertex -> wire index
    of_vertex: HashMap<VertexId, usize>,
}

fn noun_classes(d: &TextDiagram) -> Vec<Vec<VertexId>> {
    let nouns: Vec<VertexId> = d
        .vertices()
        .iter()
        .enumerate()
        .filter(|(_, l)| matches!(l.word(), Some(w) if w.pos == Some(Category::Np)))
        .map(|(v, _)| v)
        .collect();
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
    for e in d.edges() {
        if e.kind != EdgeKind::Wire {
            continue;
        }
        let (a, b) = (e.a.vertex, e.b.vertex);
        if parent.contains_key(&a) && parent.contains_key(&b) {
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra != rb {
                let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
                parent.insert(hi, lo);
            }
        }
    }
    let mut classes: HashMap<VertexId, Vec<VertexId>> = HashMap::new();
    for &v in &nouns {
        let root = find(&mut parent, v);
        classes.entry(root).or_default().push(v);
    }
    let mut roots: Vec<VertexId> = classes.keys().copied().collect();
    roots.sort_unstable();
    roots
        .into_iter()
        .map(|r| {
            let mut members = classes.remove(&r).unwrap();
            members.sort_unstable();
            members
        })
        .collect()
}

fn word<'d>(d: &'d TextDiagram, v: VertexId) -> &'d WordInfo {
    d.vertices()[v].word().expect("word vertex")
}

/// Wire-edge endpoints of a vertex, in slot order on that vertex.
fn wire_neighbors(d: &TextDiagram, v: VertexId) -> Vec<VertexId> {
    let mut ports: Vec<(usize, VertexId)> = Vec::new();
    for e in d.edges() {
        if e.kind != EdgeKind::Wire {
            continue;
        }
        if e.a.vertex == v {
            ports.push((e.a.slot, e.b.vertex));
        } else if e.b.vertex == v {
            ports.push((e.b.slot, e.a.vertex));
        }
    }
    ports.sort_unstable();
    ports.into_iter().map(|(_, w)| w).collect()
}

fn attach_neighbors(d: &TextDiagram, v: VertexId) -> Vec<VertexId> {
    let mut out = Vec::new();
    for e in d.edges() {
        if e.kind != EdgeKind::Attach {
            continue;
        }
        if e.a.vertex == v {
            out.push(e.b.vertex);
        } else if e.b.vertex == v {
            out.push(e.a.vertex);
        }
    }
    out.sort_unstable();
    out
}

/// Build the text circuit of a normalized diagram. One wire per noun
/// participant; the copula leaves no box; silent postpositions become
/// explicit adposition frames.
pub fn diagram_to_circuit(d: &TextDiagram) -> Result<TextCircuit, CircuitError> {
    let classes = noun_classes(d);
    let mut table = WireTable {
        of_vertex: HashMap::new(),
    };
    let mut wires = Vec::new();
    for (wix, members) in classes.iter().enumerate() {
        let rep = members
            .iter()
            .find(|v| word(d, **v).pronoun.is_none())
            .copied();
        let Some(rep) = rep else {
            let surface = word(d, members[0]).surface.clone();
            return Err(CircuitError::UnresolvedPronoun(surface));
        };
        let w = word(d, rep);
        wires.push(NounWire {
            base: w.base.clone(),
            surface: w.surface.clone(),
            en_base: w.en_base.clone(),
            bn_base: w.bn_base.clone(),
            attrs: w.entry_attrs,
            initial_attrs: w.entry_attrs,
            intro_clause: members.iter().map(|v| word(d, *v).clause).min().unwrap(),
        });
        for &v in members {
            table.of_vertex.insert(v, wix);
        }
    }
    // Group process vertices by clause.
    let mut clause_ids: Vec<usize> = d
        .vertices()
        .iter()
        .filter_map(|l| l.word().map(|w| w.clause))
        .collect();
    clause_ids.sort_unstable();
    clause_ids.dedup();
    let lang = d
        .vertices()
        .iter()
        .find_map(|l| l.word())
        .map(|w| w.lang)
        .unwrap_or(Lang::En);
    let mut circuit = TextCircuit {
        lang,
        wires,
        boxes: Vec::new(),
        updates: Vec::new(),
        clause_count: clause_ids.len(),
        clause_sentence: (0..clause_ids.len()).collect(),
        meta: Vec::new(),
        next_seq: clause_ids.len() * 1000,
    };
    for (clause_ord, &clause) in clause_ids.iter().enumerate() {
        let members: Vec<VertexId> = (0..d.vertex_count())
            .filter(|v| {
                d.vertices()[*v]
                    .word()
                    .map(|w| w.clause == clause)
                    .unwrap_or(false)
            })
            .collect();
        let mut meta = ClauseMeta {
            clause: clause_ord,
            ..ClauseMeta::default()
        };
        // Noun mention records: markers and pronoun mentions.
        for &v in &members {
            let w = word(d, v);
            if w.pos != Some(Category::Np) {
                continue;
            }
            let Some(&wire) = table.of_vertex.get(&v) else { continue };
            for m in &w.stripped {
                meta.strips.push((wire, m.clone()));
            }
            if let Some(kind) = w.pronoun {
                meta.pronouns.push((wire, w.attrs, kind));
            }
        }
        let verb = members
            .iter()
            .copied()
            .find(|v| matches!(word(d, *v).pos, Some(Category::Tvp) | Some(Category::Ivp)));
        let scv = members
            .iter()
            .copied()
            .find(|v| word(d, *v).pos == Some(Category::Scv));
        let cnj = members
            .iter()
            .copied()
            .find(|v| word(d, *v).pos == Some(Category::Cnj) && d.wire_degree(*v) == 0);
        let copula = members
            .iter()
            .copied()
            .find(|v| word(d, *v).pos.is_none());
        let adjectives: Vec<VertexId> = members
            .iter()
            .copied()
            .filter(|v| word(d, *v).pos == Some(Category::Adj))
            .collect();
        let adp = members
            .iter()
            .copied()
            .find(|v| word(d, *v).pos == Some(Category::Adp));
        let main_is_verbless = verb.is_none() && scv.is_none() && cnj.is_none();
        // The predicative adjective: the one the copula attaches to, or the
        // clause-final one where the copula is dropped.
        let predicative_adj: Option<VertexId> = if main_is_verbless {
            match copula {
                Some(c) => attach_neighbors(d, c)
                    .into_iter()
                    .find(|n| adjectives.contains(n)),
                None => adjectives.iter().copied().max(),
            }
        } else {
            None
        };
        // Attributive adjectives first, in mention order.
        for &a in &adjectives {
            if Some(a) == predicative_adj {
                continue;
            }
            let target = wire_neighbors(d, a)
                .into_iter()
                .find_map(|n| table.of_vertex.get(&n).copied());
            let Some(wire) = target else { continue };
            push_adj_box(
                &mut circuit,
                &mut meta,
                d,
                a,
                wire,
                false,
                copula.is_some(),
                clause_ord,
            );
        }
        if let Some(v) = verb {
            let (operands, frame_extra) = verb_operands(d, v, &table)?;
            let verb_word = word(d, v);
            let mut vb = ProcessBox {
                kind: BoxKind::Verb,
                base: verb_word.base.clone(),
                surface: verb_word.surface.clone(),
                en_base: verb_word.en_base.clone(),
                bn_base: verb_word.bn_base.clone(),
                operands: operands.clone(),
                nested: None,
                adverbs: adverb_mods(d, v),
                predicative: false,
                clause: clause_ord,
                seq: clause_ord * 1000 + 500,
            };
            if let Some(marker) = verb_word.stripped.iter().find_map(|m| match m {
                Marker::HonorificAgreement(h) => Some(*h),
                _ => None,
            }) {
                if let Some(subj) = operands.first() {
                    meta.verb_honorific = Some((subj.wire, marker));
                }
            }
            // NP-level conjunction: the verb's subject endpoint was the
            // conjunction vertex; wrap in a frame over the noun wires.
            if let Some((cnj_v, cnj_wires)) = np_conjunction(d, v, &table) {
                let cw = word(d, cnj_v);
                // Frame operands are the conjoined noun wires; the nested
                // verb additionally spans any remaining arguments.
                let frame_ops: Vec<Operand> = cnj_wires
                    .iter()
                    .map(|w| Operand {
                        wire: *w,
                        pronoun: None,
                    })
                    .collect();
                let mut inner_ops = frame_ops.clone();
                for op in &operands {
                    if !inner_ops.iter().any(|o| o.wire == op.wire) {
                        inner_ops.push(*op);
                    }
                }
                vb.operands = inner_ops;
                circuit.boxes.push(ProcessBox {
                    kind: BoxKind::ConjunctionFrame,
                    base: cw.base.clone(),
                    surface: cw.surface.clone(),
                    en_base: cw.en_base.clone(),
                    bn_base: cw.bn_base.clone(),
                    operands: frame_ops,
                    nested: Some(Box::new(vb)),
                    adverbs: Vec::new(),
                    predicative: false,
                    clause: clause_ord,
                    seq: clause_ord * 1000 + 500,
                });
            } else if let Some(extra) = frame_extra {
                // Adposition frame, explicit or made explicit.
                let frame_word = adp.map(|a| word(d, a).clone());
                let mut frame_ops = operands.clone();
                frame_ops.push(extra);
                let frame = match frame_word {
                    Some(fw) => ProcessBox {
                        kind: BoxKind::AdpositionFrame,
                        base: fw.base,
                        surface: fw.surface,
                        en_base: fw.en_base,
                        bn_base: fw.bn_base,
                        operands: frame_ops,
                        nested: Some(Box::new(vb)),
                        adverbs: Vec::new(),
                        predicative: false,
                        clause: clause_ord,
                        seq: clause_ord * 1000 + 500,
                    },
                    None => ProcessBox {
                        // Silent postposition made explicit in the circuit.
                        kind: BoxKind::AdpositionFrame,
                        base: if lang == Lang::Bn { "prati" } else { "to" }.to_string(),
                        surface: "prati".to_string(),
                        en_base: Some("to".to_string()),
                        bn_base: Some("prati".to_string()),
                        operands: frame_ops,
                        nested: Some(Box::new(vb)),
                        adverbs: Vec::new(),
                        predicative: false,
                        clause: clause_ord,
                        seq: clause_ord * 1000 + 500,
                    },
                };
                circuit.boxes.push(frame);
            } else {
                circuit.boxes.push(vb);
            }
        } else if let Some(v) = scv {
            let w = word(d, v);
            let operands: Vec<Operand> = wire_neighbors(d, v)
                .into_iter()
                .filter_map(|n| {
                    table.of_vertex.get(&n).map(|&wire| Operand {
                        wire,
                        pronoun: word(d, n).pronoun,
                    })
                })
                .collect();
            circuit.boxes.push(ProcessBox {
                kind: BoxKind::Verb,
                base: w.base.clone(),
                surface: w.surface.clone(),
                en_base: w.en_base.clone(),
                bn_base: w.bn_base.clone(),
                operands,
                nested: None,
                adverbs: Vec::new(),
                predicative: false,
                clause: clause_ord,
                seq: clause_ord * 1000 + 500,
            });
        } else if let Some(v) = cnj {
            // Clause-level conjunction: a frame over the wires of the
            // clauses it joins, with no nested box of its own.
            let w = word(d, v);
            let mut touched: Vec<usize> = d
                .bubbles()
                .iter()
                .filter(|b| b.owner == v)
                .flat_map(|b| b.members.iter())
                .filter_map(|m| table.of_vertex.get(m).copied())
                .collect();
            touched.sort_unstable();
            touched.dedup();
            circuit.boxes.push(ProcessBox {
                kind: BoxKind::ConjunctionFrame,
                base: w.base.clone(),
                surface: w.surface.clone(),
                en_base: w.en_base.clone(),
                bn_base: w.bn_base.clone(),
                operands: touched
                    .into_iter()
                    .map(|wire| Operand {
                        wire,
                        pronoun: None,
                    })
                    .collect(),
                nested: None,
                adverbs: Vec::new(),
                predicative: false,
                clause: clause_ord,
                seq: clause_ord * 1000 + 500,
            });
        } else if let Some(a) = predicative_adj {
            // Adjective predication; the copula is absorbed.
            let target = wire_neighbors(d, a)
                .into_iter()
                .find_map(|n| table.of_vertex.get(&n).copied());
            let Some(wire) = target else {
                return Err(CircuitError::UnresolvedPronoun(word(d, a).surface.clone()));
            };
            push_adj_box(
                &mut circuit,
                &mut meta,
                d,
                a,
                wire,
                true,
                copula.is_some(),
                clause_ord,
            );
        }
        circuit.meta.push(meta);
    }
    Ok(circuit)
}

#[allow(clippy::too_many_arguments)]
fn push_adj_box(
    circuit: &mut TextCircuit,
    meta: &mut ClauseMeta,
    d: &TextDiagram,
    v: VertexId,
    wire: usize,
    predicative: bool,
    copula: bool,
    clause_ord: usize,
) {
    let w = word(d, v);
    let mention = adj_mention_pronoun(d, v);
    meta.adjectives.push(AdjMeta {
        wire,
        gender_agreeing: w.gender_agreeing,
        suffixed: w.stripped.contains(&Marker::GenderSuffixI),
        predicative,
        copula,
        subject_pronoun: mention == Some(PronounKind::Personal),
    });
    let offset = if predicative { 500 } else { 100 };
    let within = circuit
        .boxes
        .iter()
        .filter(|b| b.clause == clause_ord)
        .count();
    circuit.boxes.push(ProcessBox {
        kind: BoxKind::Adjective,
        base: w.base.clone(),
        surface: w.surface.clone(),
        en_base: w.en_base.clone(),
        bn_base: w.bn_base.clone(),
        operands: vec![Operand {
            wire,
            pronoun: mention,
        }],
        nested: None,
        adverbs: Vec::new(),
        predicative,
        clause: clause_ord,
        seq: clause_ord * 1000 + offset + within,
    });
}

/// The pronoun kind of the noun mention the adjective is wired to.
fn adj_mention_pronoun(d: &TextDiagram, adj: VertexId) -> Option<PronounKind> {
    wire_neighbors(d, adj)
        .into_iter()
        .find(|n| word_opt(d, *n).map(|w| w.pos == Some(Category::Np)).unwrap_or(false))
        .and_then(|n| word(d, n).pronoun)
}

fn word_opt<'d>(d: &'d TextDiagram, v: VertexId) -> Option<&'d WordInfo> {
    d.vertices()[v].word()
}

/// The verb's operand wires in slot order, plus the frame participant when
/// a recipient or oblique attaches (silent case marker or adposition).
fn verb_operands(
    d: &TextDiagram,
    v: VertexId,
    table: &WireTable,
) -> Result<(Vec<Operand>, Option<Operand>), CircuitError> {
    let mut operands = Vec::new();
    for n in wire_neighbors(d, v) {
        if let Some(&wire) = table.of_vertex.get(&n) {
            operands.push(Operand {
                wire,
                pronoun: word(d, n).pronoun,
            });
        } else if word_opt(d, n).map(|w| w.pos == Some(Category::Cnj)) == Some(true) {
            // handled by np_conjunction
        }
    }
    // Silent recipient: a noun attaching straight onto the verb.
    let mut extra = None;
    for n in attach_neighbors(d, v) {
        let Some(w) = word_opt(d, n) else { continue };
        match w.pos {
            Some(Category::Np) => {
                let wire = table.of_vertex[&n];
                extra = Some(Operand {
                    wire,
                    pronoun: w.pronoun,
                });
            }
            Some(Category::Adp) => {
                // Explicit adposition: its slot-0 wire endpoint is the
                // frame participant.
                if let Some(first) = wire_neighbors(d, n).first() {
                    if let Some(&wire) = table.of_vertex.get(first) {
                        extra = Some(Operand {
                            wire,
                            pronoun: word(d, *first).pronoun,
                        });
                    }
                }
            }
            _ => {}
        }
    }
    Ok((operands, extra))
}

/// Detect an NP-level conjunction feeding this verb; returns the
/// conjunction vertex and the wires of its operand nouns, in slot order.
fn np_conjunction(
    d: &TextDiagram,
    verb: VertexId,
    table: &WireTable,
) -> Option<(VertexId, Vec<usize>)> {
    for n in wire_neighbors(d, verb) {
        if let Some(w) = word_opt(d, n) {
            if w.pos == Some(Category::Cnj) {
                let wires: Vec<usize> = wire_neighbors(d, n)
                    .into_iter()
                    .filter(|m| *m != verb)
                    .filter_map(|m| table.of_vertex.get(&m).copied())
                    .collect();
                return Some((n, wires));
            }
        }
    }
    None
}

fn adverb_mods(d: &TextDiagram, verb: VertexId) -> Vec<AdverbMod> {
    attach_neighbors(d, verb)
        .into_iter()
        .filter_map(|n| word_opt(d, n))
        .filter(|w| w.pos == Some(Category::Adv))
        .map(|w| AdverbMod {
            base: w.base.clone(),
            surface: w.surface.clone(),
            en_base: w.en_base.clone(),
            bn_base: w.bn_base.clone(),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Attribute inference

/// Derive the deterministic update-event list from the circuit's clause
/// records, in text order. Events are emitted only when they refine what
/// is already known at that point.
pub fn infer_attributes(circuit: &TextCircuit, source_lang: Lang) -> Vec<UpdateEvent> {
    let mut attrs: Vec<NounAttributes> = circuit.wires.iter().map(|w| w.initial_attrs).collect();
    let mut events = Vec::new();
    let mut emit = |attrs: &mut Vec<NounAttributes>,
                    events: &mut Vec<UpdateEvent>,
                    wire: usize,
                    assign: AttrAssign,
                    label: &str,
                    clause: usize| {
        if let Ok(true) = attrs[wire].refine(assign) {
            events.push(UpdateEvent {
                wire,
                assign,
                label: label.to_string(),
                clause,
            });
        }
    };
    for meta in &circuit.meta {
        let clause = meta.clause;
        // Case markers first: `-kē` marks an animate referent.
        for (wire, marker) in &meta.strips {
            if *marker == Marker::AccusativeKe {
                emit(
                    &mut attrs,
                    &mut events,
                    *wire,
                    AttrAssign::Animacy(Animacy::Animate),
                    "animate",
                    clause,
                );
            }
        }
        if source_lang == Lang::En {
            // Copula plus adjective predicated of a pronoun: the referent
            // is a person.
            for adj in &meta.adjectives {
                if adj.predicative && adj.copula && adj.subject_pronoun {
                    emit(
                        &mut attrs,
                        &mut events,
                        adj.wire,
                        AttrAssign::Animacy(Animacy::Animate),
                        "person",
                        clause,
                    );
                }
            }
            // Gendered pronouns reveal their antecedent's gender.
            for (wire, mention, kind) in &meta.pronouns {
                if *kind == PronounKind::Personal && mention.gender != Gender::Unknown {
                    let label = match mention.gender {
                        Gender::Male => "male",
                        Gender::Female => "female",
                        _ => continue,
                    };
                    emit(
                        &mut attrs,
                        &mut events,
                        *wire,
                        AttrAssign::Gender(mention.gender),
                        label,
                        clause,
                    );
                }
            }
        } else {
            // Gender-agreeing adjectives: the suffixed form marks a female
            // referent, the bare form a male one (when animate).
            for adj in &meta.adjectives {
                if !adj.gender_agreeing {
                    continue;
                }
                if adj.suffixed {
                    emit(
                        &mut attrs,
                        &mut events,
                        adj.wire,
                        AttrAssign::Gender(Gender::Female),
                        "female",
                        clause,
                    );
                } else if attrs[adj.wire].animacy == Animacy::Animate {
                    emit(
                        &mut attrs,
                        &mut events,
                        adj.wire,
                        AttrAssign::Gender(Gender::Male),
                        "male",
                        clause,
                    );
                }
            }
            // Verb agreement reveals the subject's honorific level.
            if let Some((wire, h)) = meta.verb_honorific {
                let label = match h {
                    Honorific::Intimate => "intimate",
                    Honorific::Neutral => "neutral",
                    Honorific::Formal => "formal",
                    Honorific::Unknown => "",
                };
                if !label.is_empty() {
                    emit(
                        &mut attrs,
                        &mut events,
                        wire,
                        AttrAssign::Honorific(h),
                        label,
                        clause,
                    );
                }
            }
        }
    }
    events
}

// ---------------------------------------------------------------------------
// Equality

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    /// Update nodes and wire attributes are ignored.
    AttributeBlind,
    /// Update nodes must align too.
    AttributeSensitive,
}

/// Equality up to a wire permutation and the terminal correspondence
/// (attribute-blind mode).
pub fn circuits_equal(
    left: &TextCircuit,
    right: &TextCircuit,
    correspondence: &Correspondence,
) -> Result<bool, CircuitError> {
    circuits_equal_mode(left, right, correspondence, CompareMode::AttributeBlind)
}

pub fn circuits_equal_mode(
    left: &TextCircuit,
    right: &TextCircuit,
    correspondence: &Correspondence,
    mode: CompareMode,
) -> Result<bool, CircuitError> {
    // The correspondence must cover every terminal on the left.
    for w in &left.wires {
        if !correspondence.contains(&w.base) {
            return Err(CircuitError::ConditionFailed(w.base.clone()));
        }
    }
    fn check_boxes(corr: &Correspondence, b: &ProcessBox) -> Result<(), CircuitError> {
        if !corr.contains(&b.base) {
            return Err(CircuitError::ConditionFailed(b.base.clone()));
        }
        for a in &b.adverbs {
            if !corr.contains(&a.base) {
                return Err(CircuitError::ConditionFailed(a.base.clone()));
            }
        }
        match &b.nested {
            Some(inner) => check_boxes(corr, inner),
            None => Ok(()),
        }
    }
    for b in &left.boxes {
        check_boxes(correspondence, b)?;
    }
    if left.wires.len() != right.wires.len() || left.boxes.len() != right.boxes.len() {
        return Ok(false);
    }
    // Candidate wire images by translated base.
    let n = left.wires.len();
    let mut candidates: Vec<Vec<usize>> = Vec::with_capacity(n);
    for w in &left.wires {
        let image = correspondence.image(&w.base).unwrap();
        let c: Vec<usize> = right
            .wires
            .iter()
            .enumerate()
            .filter(|(_, rw)| rw.base == image)
            .map(|(ix, _)| ix)
            .collect();
        if c.is_empty() {
            return Ok(false);
        }
        candidates.push(c);
    }
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    Ok(try_wire_assignment(
        left,
        right,
        correspondence,
        mode,
        &candidates,
        0,
        &mut perm,
        &mut used,
    ))
}

#[allow(clippy::too_many_arguments)]
fn try_wire_assignment(
    left: &TextCircuit,
    right: &TextCircuit,
    corr: &Correspondence,
    mode: CompareMode,
    candidates: &[Vec<usize>],
    depth: usize,
    perm: &mut Vec<usize>,
    used: &mut Vec<bool>,
) -> bool {
    if depth == perm.len() {
        return chains_align(left, right, corr, mode, perm);
    }
    for &c in &candidates[depth] {
        if used[c] {
            continue;
        }
        perm[depth] = c;
        used[c] = true;
        if try_wire_assignment(left, right, corr, mode, candidates, depth + 1, perm, used) {
            return true;
        }
        used[c] = false;
        perm[depth] = usize::MAX;
    }
    false
}

fn boxes_equal(
    corr: &Correspondence,
    perm: &[usize],
    a: &ProcessBox,
    b: &ProcessBox,
) -> bool {
    if a.kind != b.kind
        || a.predicative != b.predicative
        || a.operands.len() != b.operands.len()
    {
        return false;
    }
    if corr.image(&a.base) != Some(b.base.as_str()) {
        return false;
    }
    for (oa, ob) in a.operands.iter().zip(&b.operands) {
        if perm[oa.wire] != ob.wire {
            return false;
        }
        if oa.pronoun.is_some() != ob.pronoun.is_some() {
            return false;
        }
    }
    let mut aa: Vec<&str> = a
        .adverbs
        .iter()
        .filter_map(|m| corr.image(&m.base))
        .collect();
    let mut bb: Vec<&str> = b.adverbs.iter().map(|m| m.base.as_str()).collect();
    aa.sort_unstable();
    bb.sort_unstable();
    if a.adverbs.len() != b.adverbs.len() || aa != bb {
        return false;
    }
    match (&a.nested, &b.nested) {
        (None, None) => true,
        (Some(x), Some(y)) => boxes_equal(corr, perm, x, y),
        _ => false,
    }
}

fn chains_align(
    left: &TextCircuit,
    right: &TextCircuit,
    corr: &Correspondence,
    mode: CompareMode,
    perm: &[usize],
) -> bool {
    let with_updates = mode == CompareMode::AttributeSensitive;
    let mut box_map: HashMap<usize, usize> = HashMap::new();
    for (lw, &rw) in perm.iter().enumerate() {
        let lc = left.chain(lw, with_updates);
        let rc = right.chain(rw, with_updates);
        if lc.len() != rc.len() {
            return false;
        }
        for (li, ri) in lc.iter().zip(&rc) {
            match (li, ri) {
                (ChainItem::Box(a), ChainItem::Box(b)) => {
                    if let Some(prev) = box_map.get(a) {
                        if prev != b {
                            return false;
                        }
                    } else {
                        box_map.insert(*a, *b);
                    }
                }
                (ChainItem::Update(a), ChainItem::Update(b)) => {
                    if left.updates[*a].assign != right.updates[*b].assign {
                        return false;
                    }
                }
                _ => return false,
            }
        }
    }
    if box_map.len() != left.boxes.len() {
        return false;
    }
    let mut images: Vec<usize> = box_map.values().copied().collect();
    images.sort_unstable();
    images.dedup();
    if images.len() != right.boxes.len() {
        return false;
    }
    box_map
        .iter()
        .all(|(a, b)| boxes_equal(corr, perm, &left.boxes[*a], &right.boxes[*b]))
}
