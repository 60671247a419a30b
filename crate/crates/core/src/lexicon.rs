//! Bilingual word store.
//!
//! Each entry pairs an English surface with a Bengali surface (either side
//! may be absent), carries part-of-speech and noun attributes, and owns a
//! small per-entry morphology table: the bound case markers, the female
//! adjective form, honorific verb agreement forms, pronoun case forms.
//! Stripping and re-applying those forms goes through the table, never
//! through generic suffix surgery, because the markers attach per word.
//!
//! The module also hosts the two terminal-set checks that gate the diagram
//! and circuit equivalences: a full bijection, and the weaker condition
//! that ignores the copula and admits the silent postposition.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::grammar::{Category, Lang};

/// Whether a noun names something alive. `Unknown` is a real state: several
/// rules refuse to fire (or fail) until it is refined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Animacy {
    Animate,
    Inanimate,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gender {
    Male,
    Female,
    Neuter,
    Unknown,
}

/// Bengali three-way honorific register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Honorific {
    Intimate,
    Neutral,
    Formal,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Person {
    First,
    Second,
    Third,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Number {
    Singular,
    Plural,
}

/// Attribute bundle attached to noun wires and noun/pronoun entries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NounAttributes {
    pub animacy: Animacy,
    pub gender: Gender,
    pub honorific: Honorific,
    pub person: Person,
    pub number: Number,
}

impl Default for NounAttributes {
    fn default() -> Self {
        NounAttributes {
            animacy: Animacy::Unknown,
            gender: Gender::Unknown,
            honorific: Honorific::Unknown,
            person: Person::Third,
            number: Number::Singular,
        }
    }
}

/// A single attribute assignment, as carried by update nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrAssign {
    Animacy(Animacy),
    Gender(Gender),
    Honorific(Honorific),
}

impl fmt::Display for AttrAssign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrAssign::Animacy(Animacy::Animate) => write!(f, "animate"),
            AttrAssign::Animacy(Animacy::Inanimate) => write!(f, "inanimate"),
            AttrAssign::Animacy(Animacy::Unknown) => write!(f, "animacy?"),
            AttrAssign::Gender(Gender::Male) => write!(f, "male"),
            AttrAssign::Gender(Gender::Female) => write!(f, "female"),
            AttrAssign::Gender(Gender::Neuter) => write!(f, "neuter"),
            AttrAssign::Gender(Gender::Unknown) => write!(f, "gender?"),
            AttrAssign::Honorific(Honorific::Intimate) => write!(f, "intimate"),
            AttrAssign::Honorific(Honorific::Neutral) => write!(f, "neutral"),
            AttrAssign::Honorific(Honorific::Formal) => write!(f, "formal"),
            AttrAssign::Honorific(Honorific::Unknown) => write!(f, "honorific?"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("attribute conflict: cannot set {wanted} over a concrete value")]
pub struct AttributeConflict {
    pub wanted: String,
}

impl NounAttributes {
    /// Monotone refinement. Concrete values may replace unknown; a concrete
    /// value never changes. Returns whether anything changed.
    pub fn refine(&mut self, assign: AttrAssign) -> Result<bool, AttributeConflict> {
        fn step<T: PartialEq + Copy>(
            slot: &mut T,
            unknown: T,
            wanted: T,
            name: &dyn fmt::Display,
        ) -> Result<bool, AttributeConflict> {
            if wanted == unknown || *slot == wanted {
                return Ok(false);
            }
            if *slot == unknown {
                *slot = wanted;
                return Ok(true);
            }
            Err(AttributeConflict {
                wanted: name.to_string(),
            })
        }
        match assign {
            AttrAssign::Animacy(a) => step(&mut self.animacy, Animacy::Unknown, a, &assign),
            AttrAssign::Gender(g) => step(&mut self.gender, Gender::Unknown, g, &assign),
            AttrAssign::Honorific(h) => step(&mut self.honorific, Honorific::Unknown, h, &assign),
        }
    }

    pub fn satisfies(&self, assign: AttrAssign) -> bool {
        match assign {
            AttrAssign::Animacy(a) => self.animacy == a,
            AttrAssign::Gender(g) => self.gender == g,
            AttrAssign::Honorific(h) => self.honorific == h,
        }
    }

    /// Greatest lower bound of two bundles; disagreeing slots fall back to
    /// unknown. Used when one surface is shared by several entries.
    fn meet(&self, other: &NounAttributes) -> NounAttributes {
        fn m<T: PartialEq + Copy>(a: T, b: T, unknown: T) -> T {
            if a == b {
                a
            } else {
                unknown
            }
        }
        NounAttributes {
            animacy: m(self.animacy, other.animacy, Animacy::Unknown),
            gender: m(self.gender, other.gender, Gender::Unknown),
            honorific: m(self.honorific, other.honorific, Honorific::Unknown),
            person: self.person,
            number: self.number,
        }
    }

    /// True when `other` does not contradict any concrete value here.
    pub fn compatible(&self, other: &NounAttributes) -> bool {
        fn c<T: PartialEq + Copy>(a: T, b: T, unknown: T) -> bool {
            a == unknown || b == unknown || a == b
        }
        c(self.animacy, other.animacy, Animacy::Unknown)
            && c(self.gender, other.gender, Gender::Unknown)
            && c(self.honorific, other.honorific, Honorific::Unknown)
    }
}

/// Adverb placement relative to the verb phrase (English only; Bengali is
/// always pre-verbal in the fragment).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Placement {
    Preverbal,
    Postverbal,
    #[default]
    Either,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PronounKind {
    Personal,
    Relative,
    Reflexive,
}

/// A bound form recognized while looking a surface up.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Marker {
    /// `-kē`: marks an animate direct object or recipient.
    AccusativeKe,
    /// `-r`: genitive, attaches before an explicit postposition.
    GenitiveR,
    /// `-ē`: locative-like marker, recognized but with no transfer rule.
    LocativeE,
    /// `-ī`: female agreement on an adjective.
    GenderSuffixI,
    /// Verb form agreeing with a subject honorific level.
    HonorificAgreement(Honorific),
    /// Object-case form of a pronoun.
    ObjectCase,
    /// Plural verb form (English).
    PluralForm,
    /// Recognized bound morpheme with no rule (`-tē`, `-thēkē`).
    Bound(String),
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Marker::AccusativeKe => write!(f, "accusative_ke"),
            Marker::GenitiveR => write!(f, "genitive_r"),
            Marker::LocativeE => write!(f, "locative_e"),
            Marker::GenderSuffixI => write!(f, "gender_suffix_i"),
            Marker::HonorificAgreement(h) => write!(f, "honorific_agreement({h:?})"),
            Marker::ObjectCase => write!(f, "object_case"),
            Marker::PluralForm => write!(f, "plural_form"),
            Marker::Bound(s) => write!(f, "bound(-{s})"),
        }
    }
}

/// Per-entry morphology table. Empty slots mean the form does not exist
/// for the word.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Forms {
    pub accusative: Option<String>,
    pub genitive: Option<String>,
    pub locative: Option<String>,
    pub female: Option<String>,
    pub hon_intimate: Option<String>,
    pub hon_neutral: Option<String>,
    pub hon_formal: Option<String>,
    pub object_en: Option<String>,
    pub object_bn: Option<String>,
    pub plural_en: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexiconEntry {
    pub en: Option<String>,
    pub bn: Option<String>,
    pub pos: Category,
    pub attrs: NounAttributes,
    pub placement: Placement,
    pub idiom: bool,
    pub pronoun: Option<PronounKind>,
    pub forms: Forms,
}

impl LexiconEntry {
    pub fn surface(&self, lang: Lang) -> Option<&str> {
        match lang {
            Lang::En => self.en.as_deref(),
            Lang::Bn => self.bn.as_deref(),
        }
    }

    /// Entries with exactly one side are untranslatable word-for-word.
    pub fn one_sided(&self) -> bool {
        self.en.is_none() || self.bn.is_none()
    }
}

/// Result of a surface lookup: the entry view after stripping, with the
/// markers that were removed and any attribute they imply already folded in.
#[derive(Debug, Clone)]
pub struct LookupResult {
    pub rows: Vec<usize>,
    pub pos: Category,
    pub base: String,
    pub en_base: Option<String>,
    pub bn_base: Option<String>,
    pub attrs: NounAttributes,
    pub entry_attrs: NounAttributes,
    pub stripped: Vec<Marker>,
    pub placement: Placement,
    pub idiom: bool,
    pub pronoun: Option<PronounKind>,
    pub one_sided: bool,
    /// The adjective takes a gender suffix (a female form exists).
    pub gender_agreeing: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LexiconError {
    #[error("lexicon line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("lexicon line {line}: unknown part of speech `{pos}`")]
    BadPos { line: usize, pos: String },
    #[error("unknown token `{0}`")]
    UnknownToken(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MorphError {
    #[error("missing attribute {attribute} for `{surface}`")]
    MissingAttribute {
        attribute: &'static str,
        surface: String,
    },
    #[error("entry has no surface on the {0:?} side")]
    NoSurface(Lang),
    #[error("no pronoun realization: {0}")]
    AmbiguousPronoun(String),
}

/// Syntactic slot a token fills, as far as morphology cares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntacticRole {
    Subject,
    DirectObject,
    /// Recipient marked on the noun itself (silent postposition absorbed
    /// into `-kē`).
    Recipient,
    /// Recipient in genitive form before an explicit postposition.
    RecipientGenitive,
    /// Attributive or predicative modifier of a noun.
    Modifier,
    /// Verb agreeing with its subject's attributes.
    Verb,
}

/// Outcome of the full translation-bijection check over two terminal sets.
#[derive(Debug, Clone)]
pub enum BijectionOutcome {
    Bijective(Correspondence),
    Failure { witness: String },
}

impl BijectionOutcome {
    pub fn is_bijective(&self) -> bool {
        matches!(self, BijectionOutcome::Bijective(_))
    }
}

/// Outcome of the weaker check: every source terminal except the copula
/// must map into the target set extended by the silent postposition, and
/// the target set must be covered.
#[derive(Debug, Clone)]
pub enum SurjectionOutcome {
    Holds(Correspondence),
    Failure { witness: String },
}

impl SurjectionOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, SurjectionOutcome::Holds(_))
    }
}

/// Base-form pairing between the two languages, as established by one of
/// the terminal-set checks (or built by hand for self-comparison).
#[derive(Debug, Clone, Default)]
pub struct Correspondence {
    forward: HashMap<String, String>,
}

impl Correspondence {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        Correspondence {
            forward: pairs.into_iter().collect(),
        }
    }

    /// Identity pairing over a label set.
    pub fn identity<I: IntoIterator<Item = String>>(labels: I) -> Self {
        Correspondence {
            forward: labels.into_iter().map(|l| (l.clone(), l)).collect(),
        }
    }

    pub fn maps(&self, from: &str, to: &str) -> bool {
        self.forward.get(from).map(String::as_str) == Some(to)
    }

    pub fn image(&self, from: &str) -> Option<&str> {
        self.forward.get(from).map(String::as_str)
    }

    pub fn contains(&self, from: &str) -> bool {
        self.forward.contains_key(from)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (&str, &str)> {
        self.forward.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }
}

type FormIndex = HashMap<String, Vec<(usize, Option<Marker>)>>;

#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<LexiconEntry>,
    en_index: FormIndex,
    bn_index: FormIndex,
    /// Multi-token idiom surfaces per language, longest first.
    idioms_en: Vec<(Vec<String>, usize)>,
    idioms_bn: Vec<(Vec<String>, usize)>,
}

fn cell(s: &str) -> Option<String> {
    let t = s.trim();
    if t.is_empty() {
        None
    } else {
        Some(t.to_string())
    }
}

fn parse_animacy(s: &str, line: usize) -> Result<Animacy, LexiconError> {
    match s {
        "" => Ok(Animacy::Unknown),
        "animate" => Ok(Animacy::Animate),
        "inanimate" => Ok(Animacy::Inanimate),
        other => Err(LexiconError::Syntax {
            line,
            msg: format!("bad animacy `{other}`"),
        }),
    }
}

fn parse_gender(s: &str, line: usize) -> Result<Gender, LexiconError> {
    match s {
        "" => Ok(Gender::Unknown),
        "male" => Ok(Gender::Male),
        "female" => Ok(Gender::Female),
        "neuter" => Ok(Gender::Neuter),
        other => Err(LexiconError::Syntax {
            line,
            msg: format!("bad gender `{other}`"),
        }),
    }
}

fn parse_honorific(s: &str, line: usize) -> Result<Honorific, LexiconError> {
    match s {
        "" => Ok(Honorific::Unknown),
        "intimate" => Ok(Honorific::Intimate),
        "neutral" => Ok(Honorific::Neutral),
        "formal" => Ok(Honorific::Formal),
        other => Err(LexiconError::Syntax {
            line,
            msg: format!("bad honorific `{other}`"),
        }),
    }
}

impl Lexicon {
    /// Load the tab-separated lexicon format: columns
    /// `en bn pos animacy gender honorific placement idiom [forms]`.
    pub fn load(text: &str) -> Result<Lexicon, LexiconError> {
        let mut entries = Vec::new();
        for (ix, raw) in text.lines().enumerate() {
            let line = ix + 1;
            if raw.trim().is_empty() || raw.trim_start().starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() < 3 {
                return Err(LexiconError::Syntax {
                    line,
                    msg: "expected at least en, bn, pos columns".into(),
                });
            }
            let get = |i: usize| cols.get(i).copied().unwrap_or("").trim();
            let en = cell(get(0));
            let bn = cell(get(1));
            if en.is_none() && bn.is_none() {
                return Err(LexiconError::Syntax {
                    line,
                    msg: "entry has neither surface".into(),
                });
            }
            let mut pronoun = None;
            let pos = match get(2) {
                "NP" => Category::Np,
                "TVP" => Category::Tvp,
                "IVP" => Category::Ivp,
                "ADJ" => Category::Adj,
                "ADV" => Category::Adv,
                "ADP" => Category::Adp,
                "CNJ" => Category::Cnj,
                "SCV" => Category::Scv,
                "PRO" => {
                    pronoun = Some(PronounKind::Personal);
                    Category::Np
                }
                other => {
                    return Err(LexiconError::BadPos {
                        line,
                        pos: other.to_string(),
                    })
                }
            };
            let mut attrs = NounAttributes {
                animacy: parse_animacy(get(3), line)?,
                gender: parse_gender(get(4), line)?,
                honorific: parse_honorific(get(5), line)?,
                ..NounAttributes::default()
            };
            let placement = match get(6) {
                "" => Placement::Either,
                "preverbal" => Placement::Preverbal,
                "postverbal" => Placement::Postverbal,
                "either" => Placement::Either,
                other => {
                    return Err(LexiconError::Syntax {
                        line,
                        msg: format!("bad placement `{other}`"),
                    })
                }
            };
            let idiom = matches!(get(7), "yes" | "1" | "true");
            let mut forms = Forms::default();
            for item in get(8).split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (key, value) = item.split_once(':').ok_or_else(|| LexiconError::Syntax {
                    line,
                    msg: format!("bad form spec `{item}`"),
                })?;
                let value = value.trim().to_string();
                match key.trim() {
                    "ke" => forms.accusative = Some(value),
                    "gen" => forms.genitive = Some(value),
                    "loc" => forms.locative = Some(value),
                    "f" => forms.female = Some(value),
                    "hon_int" => forms.hon_intimate = Some(value),
                    "hon_neu" => forms.hon_neutral = Some(value),
                    "hon_for" => forms.hon_formal = Some(value),
                    "obj_en" => forms.object_en = Some(value),
                    "obj_bn" => forms.object_bn = Some(value),
                    "pl" => forms.plural_en = Some(value),
                    "kind" => {
                        pronoun = Some(match value.as_str() {
                            "personal" => PronounKind::Personal,
                            "relative" => PronounKind::Relative,
                            "reflexive" => PronounKind::Reflexive,
                            other => {
                                return Err(LexiconError::Syntax {
                                    line,
                                    msg: format!("bad pronoun kind `{other}`"),
                                })
                            }
                        })
                    }
                    "person" => {
                        attrs.person = match value.as_str() {
                            "first" => Person::First,
                            "second" => Person::Second,
                            "third" => Person::Third,
                            other => {
                                return Err(LexiconError::Syntax {
                                    line,
                                    msg: format!("bad person `{other}`"),
                                })
                            }
                        }
                    }
                    "num" => {
                        attrs.number = match value.as_str() {
                            "sg" => Number::Singular,
                            "pl" => Number::Plural,
                            other => {
                                return Err(LexiconError::Syntax {
                                    line,
                                    msg: format!("bad number `{other}`"),
                                })
                            }
                        }
                    }
                    other => {
                        return Err(LexiconError::Syntax {
                            line,
                            msg: format!("unknown form key `{other}`"),
                        })
                    }
                }
            }
            entries.push(LexiconEntry {
                en,
                bn,
                pos,
                attrs,
                placement,
                idiom,
                pronoun,
                forms,
            });
        }
        Ok(Lexicon::from_entries(entries))
    }

    pub fn from_entries(entries: Vec<LexiconEntry>) -> Lexicon {
        let mut lex = Lexicon {
            entries,
            en_index: HashMap::new(),
            bn_index: HashMap::new(),
            idioms_en: Vec::new(),
            idioms_bn: Vec::new(),
        };
        for ix in 0..lex.entries.len() {
            let e = lex.entries[ix].clone();
            if let Some(s) = &e.en {
                lex.index_surface(Lang::En, s, ix, None);
                if let Some(f) = &e.forms.object_en {
                    lex.index_surface(Lang::En, f, ix, Some(Marker::ObjectCase));
                }
                if let Some(f) = &e.forms.plural_en {
                    lex.index_surface(Lang::En, f, ix, Some(Marker::PluralForm));
                }
            }
            if let Some(s) = &e.bn {
                lex.index_surface(Lang::Bn, s, ix, None);
                let forms = [
                    (&e.forms.accusative, Marker::AccusativeKe),
                    (&e.forms.genitive, Marker::GenitiveR),
                    (&e.forms.locative, Marker::LocativeE),
                    (&e.forms.female, Marker::GenderSuffixI),
                    (
                        &e.forms.hon_intimate,
                        Marker::HonorificAgreement(Honorific::Intimate),
                    ),
                    (
                        &e.forms.hon_neutral,
                        Marker::HonorificAgreement(Honorific::Neutral),
                    ),
                    (
                        &e.forms.hon_formal,
                        Marker::HonorificAgreement(Honorific::Formal),
                    ),
                ];
                for (form, marker) in forms {
                    if let Some(f) = form {
                        lex.index_surface(Lang::Bn, f, ix, Some(marker.clone()));
                    }
                }
                if let Some(f) = &e.forms.object_bn {
                    lex.index_surface(Lang::Bn, f, ix, Some(Marker::ObjectCase));
                }
            }
        }
        for (ix, e) in lex.entries.iter().enumerate() {
            if !e.idiom {
                continue;
            }
            if let Some(s) = &e.en {
                let toks: Vec<String> = s.split_whitespace().map(String::from).collect();
                if toks.len() > 1 {
                    lex.idioms_en.push((toks, ix));
                }
            }
            if let Some(s) = &e.bn {
                let toks: Vec<String> = s.split_whitespace().map(String::from).collect();
                if toks.len() > 1 {
                    lex.idioms_bn.push((toks, ix));
                }
            }
        }
        lex.idioms_en.sort_by_key(|(t, _)| std::cmp::Reverse(t.len()));
        lex.idioms_bn.sort_by_key(|(t, _)| std::cmp::Reverse(t.len()));
        lex
    }

    fn index_surface(&mut self, lang: Lang, surface: &str, ix: usize, marker: Option<Marker>) {
        let index = match lang {
            Lang::En => &mut self.en_index,
            Lang::Bn => &mut self.bn_index,
        };
        index
            .entry(surface.to_string())
            .or_default()
            .push((ix, marker));
    }

    pub fn entries(&self) -> &[LexiconEntry] {
        &self.entries
    }

    pub fn entry(&self, ix: usize) -> &LexiconEntry {
        &self.entries[ix]
    }

    /// Tokenize one sentence, merging multi-token idioms greedily, longest
    /// match first. Sentence-final punctuation is dropped.
    pub fn tokenize(&self, lang: Lang, sentence: &str) -> Vec<String> {
        let mut words: Vec<String> = sentence
            .split_whitespace()
            .map(|w| w.trim_matches(|c| c == '.' || c == ',').to_string())
            .filter(|w| !w.is_empty())
            .collect();
        let idioms = match lang {
            Lang::En => &self.idioms_en,
            Lang::Bn => &self.idioms_bn,
        };
        if idioms.is_empty() {
            return words;
        }
        let mut out = Vec::new();
        let mut i = 0;
        'outer: while i < words.len() {
            for (pattern, _) in idioms {
                if words[i..].len() >= pattern.len()
                    && words[i..i + pattern.len()] == pattern[..]
                {
                    out.push(pattern.join(" "));
                    i += pattern.len();
                    continue 'outer;
                }
            }
            out.push(std::mem::take(&mut words[i]));
            i += 1;
        }
        out
    }

    fn hits(&self, lang: Lang, surface: &str) -> Option<(&Vec<(usize, Option<Marker>)>, String)> {
        let index = match lang {
            Lang::En => &self.en_index,
            Lang::Bn => &self.bn_index,
        };
        if let Some(hits) = index.get(surface) {
            return Some((hits, surface.to_string()));
        }
        // Sentence-initial capitalization: retry with the first char lowered.
        let mut chars = surface.chars();
        if let Some(first) = chars.next() {
            if first.is_uppercase() {
                let lowered: String = first.to_lowercase().chain(chars).collect();
                if let Some(hits) = index.get(&lowered) {
                    return Some((hits, lowered));
                }
            }
        }
        None
    }

    /// Look a surface up, stripping bound forms through the morphology
    /// table. Entries sharing the surface (pronoun asymmetry) are folded
    /// into one view whose disagreeing attributes become unknown.
    pub fn lookup(&self, surface: &str, lang: Lang) -> Result<LookupResult, LexiconError> {
        if let Some((hits, _)) = self.hits(lang, surface) {
            return Ok(self.resolve_hits(surface, lang, hits.clone()));
        }
        // Recognized bound morphemes with no transfer rule.
        if lang == Lang::Bn {
            for suffix in ["thēkē", "tē"] {
                if let Some(stem) = surface.strip_suffix(suffix) {
                    if let Some((hits, _)) = self.hits(lang, stem) {
                        let noun_hits: Vec<(usize, Option<Marker>)> = hits
                            .iter()
                            .filter(|(ix, m)| {
                                m.is_none() && self.entries[*ix].pos == Category::Np
                            })
                            .cloned()
                            .collect();
                        if !noun_hits.is_empty() {
                            let mut res = self.resolve_hits(surface, lang, noun_hits);
                            res.stripped.push(Marker::Bound(suffix.to_string()));
                            return Ok(res);
                        }
                    }
                }
            }
        }
        Err(LexiconError::UnknownToken(surface.to_string()))
    }

    fn resolve_hits(
        &self,
        surface: &str,
        lang: Lang,
        hits: Vec<(usize, Option<Marker>)>,
    ) -> LookupResult {
        let rows: Vec<usize> = hits.iter().map(|(ix, _)| *ix).collect();
        let first = &self.entries[rows[0]];
        let mut entry_attrs = first.attrs;
        for ix in rows.iter().skip(1) {
            entry_attrs = entry_attrs.meet(&self.entries[*ix].attrs);
        }
        let mut stripped = Vec::new();
        if let Some(m) = hits[0].1.clone() {
            stripped.push(m);
        }
        let mut attrs = entry_attrs;
        if stripped.contains(&Marker::AccusativeKe) {
            // The marker itself signals an animate referent.
            let _ = attrs.refine(AttrAssign::Animacy(Animacy::Animate));
        }
        let same = |side: fn(&LexiconEntry) -> Option<&str>| -> Option<String> {
            let v = side(first)?;
            for ix in &rows {
                if side(&self.entries[*ix]) != Some(v) {
                    return None;
                }
            }
            Some(v.to_string())
        };
        let en_base = same(|e| e.en.as_deref());
        let bn_base = same(|e| e.bn.as_deref());
        let base = match lang {
            Lang::En => en_base.clone(),
            Lang::Bn => bn_base.clone(),
        }
        .unwrap_or_else(|| surface.to_string());
        LookupResult {
            pos: first.pos,
            base,
            en_base,
            bn_base,
            attrs,
            entry_attrs,
            stripped,
            placement: first.placement,
            idiom: first.idiom,
            pronoun: first.pronoun,
            one_sided: rows.iter().all(|ix| self.entries[*ix].one_sided()),
            gender_agreeing: first.forms.female.is_some(),
            rows,
        }
    }

    /// All part-of-speech readings for a surface (used to seed the chart).
    pub fn candidates(&self, surface: &str, lang: Lang) -> Vec<LookupResult> {
        let Some((hits, _)) = self.hits(lang, surface).or_else(|| {
            // Route through lookup for the bound-morpheme fallback.
            None
        }) else {
            return match self.lookup(surface, lang) {
                Ok(res) => vec![res],
                Err(_) => Vec::new(),
            };
        };
        let mut by_pos: Vec<(Category, Vec<(usize, Option<Marker>)>)> = Vec::new();
        for hit in hits {
            let pos = self.entries[hit.0].pos;
            match by_pos.iter_mut().find(|(p, _)| *p == pos) {
                Some((_, v)) => v.push(hit.clone()),
                None => by_pos.push((pos, vec![hit.clone()])),
            }
        }
        by_pos
            .into_iter()
            .map(|(_, hits)| self.resolve_hits(surface, lang, hits))
            .collect()
    }

    fn base_of(&self, surface: &str, lang: Lang) -> Option<LookupResult> {
        self.lookup(surface, lang).ok()
    }

    /// Full one-to-one translation correspondence between two terminal
    /// sets, compared at base-form level (case markers stripped).
    pub fn check_bijection(&self, s_e: &[String], s_b: &[String]) -> BijectionOutcome {
        let mut pairs: HashMap<String, String> = HashMap::new();
        let mut covered: HashMap<String, String> = HashMap::new();
        let bn_bases: Vec<(String, String)> = match self.bases(s_b, Lang::Bn) {
            Ok(b) => b,
            Err(witness) => return BijectionOutcome::Failure { witness },
        };
        let en_bases: Vec<(String, String)> = match self.bases(s_e, Lang::En) {
            Ok(b) => b,
            Err(witness) => return BijectionOutcome::Failure { witness },
        };
        for (surface, en_base) in &en_bases {
            let res = self.base_of(surface, Lang::En).expect("base resolved");
            let Some(image) = res.bn_base.clone() else {
                return BijectionOutcome::Failure {
                    witness: surface.clone(),
                };
            };
            if !bn_bases.iter().any(|(_, b)| *b == image) {
                return BijectionOutcome::Failure {
                    witness: surface.clone(),
                };
            }
            if let Some(prev) = pairs.get(en_base) {
                if *prev != image {
                    return BijectionOutcome::Failure {
                        witness: surface.clone(),
                    };
                }
            }
            if let Some(owner) = covered.get(&image) {
                if owner != en_base {
                    // Two distinct source words landing on one target word.
                    return BijectionOutcome::Failure {
                        witness: surface.clone(),
                    };
                }
            }
            pairs.insert(en_base.clone(), image.clone());
            covered.insert(image, en_base.clone());
        }
        for (surface, bn_base) in &bn_bases {
            if !covered.contains_key(bn_base) {
                return BijectionOutcome::Failure {
                    witness: surface.clone(),
                };
            }
        }
        BijectionOutcome::Bijective(Correspondence { forward: pairs })
    }

    fn bases(&self, set: &[String], lang: Lang) -> Result<Vec<(String, String)>, String> {
        set.iter()
            .map(|s| match self.base_of(s, lang) {
                Some(res) => Ok((s.clone(), res.base)),
                None => Err(s.clone()),
            })
            .collect()
    }

    /// The weaker condition: every source terminal except `is` must map
    /// into the target bases extended by `prati`, covering the target set.
    /// Missing entries are reported before non-membership, in set order.
    pub fn check_surjection_condition(
        &self,
        s_e: &[String],
        s_b: &[String],
    ) -> SurjectionOutcome {
        let sources: Vec<&String> = s_e.iter().filter(|s| s.as_str() != "is").collect();
        let mut images: Vec<(String, String, String)> = Vec::new(); // surface, en base, image
        for surface in &sources {
            let Some(res) = self.base_of(surface, Lang::En) else {
                return SurjectionOutcome::Failure {
                    witness: (*surface).clone(),
                };
            };
            let Some(image) = res.bn_base.clone() else {
                return SurjectionOutcome::Failure {
                    witness: (*surface).clone(),
                };
            };
            images.push(((*surface).clone(), res.base, image));
        }
        let bn_bases = match self.bases(s_b, Lang::Bn) {
            Ok(b) => b,
            Err(witness) => return SurjectionOutcome::Failure { witness },
        };
        for (surface, _, image) in &images {
            let in_target = bn_bases.iter().any(|(_, b)| b == image) || image == "prati";
            if !in_target {
                return SurjectionOutcome::Failure {
                    witness: surface.clone(),
                };
            }
        }
        for (surface, base) in &bn_bases {
            if !images.iter().any(|(_, _, image)| image == base) {
                return SurjectionOutcome::Failure {
                    witness: surface.clone(),
                };
            }
        }
        SurjectionOutcome::Holds(Correspondence {
            forward: images
                .into_iter()
                .map(|(_, base, image)| (base, image))
                .collect(),
        })
    }

    /// Produce the surface for an entry in a syntactic slot. Rules apply in
    /// a fixed order: case marker, then gender suffix, then agreement.
    pub fn apply_morphology(
        &self,
        entry: &LexiconEntry,
        role: SyntacticRole,
        attrs: &NounAttributes,
        lang: Lang,
    ) -> Result<String, MorphError> {
        let base = entry
            .surface(lang)
            .ok_or(MorphError::NoSurface(lang))?
            .to_string();
        if lang == Lang::En {
            // English in the fragment only inflects verbs for number and
            // pronouns for case.
            if entry.pos == Category::Tvp || entry.pos == Category::Ivp {
                if attrs.number == Number::Plural {
                    if let Some(pl) = &entry.forms.plural_en {
                        return Ok(pl.clone());
                    }
                }
                return Ok(base);
            }
            if entry.pronoun.is_some()
                && matches!(role, SyntacticRole::DirectObject | SyntacticRole::Recipient)
            {
                if let Some(obj) = &entry.forms.object_en {
                    return Ok(obj.clone());
                }
            }
            return Ok(base);
        }
        match entry.pos {
            Category::Np => {
                if entry.pronoun.is_some() {
                    if matches!(role, SyntacticRole::DirectObject | SyntacticRole::Recipient) {
                        if let Some(obj) = &entry.forms.object_bn {
                            return Ok(obj.clone());
                        }
                    }
                    return Ok(base);
                }
                match role {
                    SyntacticRole::DirectObject | SyntacticRole::Recipient => {
                        match attrs.animacy {
                            Animacy::Animate => {
                                if let Some(ke) = &entry.forms.accusative {
                                    Ok(ke.clone())
                                } else {
                                    Ok(base)
                                }
                            }
                            Animacy::Inanimate => Ok(base),
                            Animacy::Unknown => Err(MorphError::MissingAttribute {
                                attribute: "animacy",
                                surface: base,
                            }),
                        }
                    }
                    SyntacticRole::RecipientGenitive => {
                        entry.forms.genitive.clone().ok_or_else(|| {
                            MorphError::MissingAttribute {
                                attribute: "genitive form",
                                surface: base,
                            }
                        })
                    }
                    _ => Ok(base),
                }
            }
            Category::Adj => {
                if entry.forms.female.is_some() && attrs.gender == Gender::Female {
                    Ok(entry.forms.female.clone().unwrap())
                } else {
                    Ok(base)
                }
            }
            Category::Tvp | Category::Ivp | Category::Scv => {
                // Agreement fires only when the subject honorific is known.
                let form = match attrs.honorific {
                    Honorific::Intimate => entry.forms.hon_intimate.clone(),
                    Honorific::Neutral => entry.forms.hon_neutral.clone(),
                    Honorific::Formal => entry.forms.hon_formal.clone(),
                    Honorific::Unknown => None,
                };
                Ok(form.unwrap_or(base))
            }
            _ => Ok(base),
        }
    }

    /// Choose a pronoun surface from attributes. Candidate entries whose
    /// concrete attributes all match are collected; if they agree on one
    /// surface it wins, otherwise the choice is genuinely ambiguous.
    /// An unknown honorific defaults to neutral rather than failing.
    pub fn realize_pronoun(
        &self,
        kind: PronounKind,
        role: SyntacticRole,
        attrs: &NounAttributes,
        lang: Lang,
    ) -> Result<String, MorphError> {
        let mut wanted = *attrs;
        if wanted.honorific == Honorific::Unknown {
            wanted.honorific = Honorific::Neutral;
        }
        let mut surfaces: Vec<String> = Vec::new();
        for entry in &self.entries {
            if entry.pronoun != Some(kind) {
                continue;
            }
            if entry.surface(lang).is_none() {
                continue;
            }
            let ea = &entry.attrs;
            let fits = |ok: bool| ok;
            // Every concrete attribute on the row must be matched by a
            // concrete attribute on the wire; unknown on the wire only
            // matches rows that do not care.
            let gender_ok = ea.gender == Gender::Unknown || ea.gender == wanted.gender;
            let animacy_ok = ea.animacy == Animacy::Unknown || ea.animacy == wanted.animacy;
            let honorific_ok =
                ea.honorific == Honorific::Unknown || ea.honorific == wanted.honorific;
            let person_ok = ea.person == wanted.person;
            let number_ok = ea.number == wanted.number;
            if fits(gender_ok && animacy_ok && honorific_ok && person_ok && number_ok) {
                let surface = self
                    .apply_morphology(entry, role, &wanted, lang)
                    .unwrap_or_else(|_| entry.surface(lang).unwrap().to_string());
                if !surfaces.contains(&surface) {
                    surfaces.push(surface);
                }
            }
        }
        match surfaces.len() {
            0 => Err(MorphError::AmbiguousPronoun(format!(
                "no {kind:?} pronoun for person={:?} number={:?} gender={:?}",
                wanted.person, wanted.number, wanted.gender
            ))),
            1 => Ok(surfaces.pop().unwrap()),
            _ => Err(MorphError::AmbiguousPronoun(format!(
                "gender unknown: candidates {}",
                surfaces.join("/")
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lex() -> Lexicon {
        let text = std::fs::read_to_string(concat!(
            env!("CARGO_MANIFEST_DIR"),
            "/../../lexicon/en-bn.tsv"
        ))
        .unwrap();
        Lexicon::load(&text).unwrap()
    }

    #[test]
    fn lookup_strips_accusative_and_implies_animacy() {
        let lex = lex();
        let res = lex.lookup("Billiekē", Lang::Bn).unwrap();
        assert_eq!(res.base, "Billie");
        assert_eq!(res.stripped, vec![Marker::AccusativeKe]);
        assert_eq!(res.attrs.animacy, Animacy::Animate);
        // The stored entry itself stays unknown.
        assert_eq!(res.entry_attrs.animacy, Animacy::Unknown);
    }

    #[test]
    fn lookup_plain_token_strips_nothing() {
        let lex = lex();
        let res = lex.lookup("Millie", Lang::En).unwrap();
        assert!(res.stripped.is_empty());
        assert_eq!(res.attrs.gender, Gender::Female);
    }

    #[test]
    fn lookup_gendered_adjective_form() {
        let lex = lex();
        let res = lex.lookup("sundarī", Lang::Bn).unwrap();
        assert_eq!(res.base, "sundara");
        assert_eq!(res.en_base.as_deref(), Some("pretty"));
        assert_eq!(res.stripped, vec![Marker::GenderSuffixI]);
        assert!(res.gender_agreeing);
    }

    #[test]
    fn lookup_merges_shared_pronoun_surface() {
        let lex = lex();
        let res = lex.lookup("sē", Lang::Bn).unwrap();
        assert_eq!(res.attrs.gender, Gender::Unknown);
        assert_eq!(res.attrs.animacy, Animacy::Animate);
        assert_eq!(res.attrs.honorific, Honorific::Neutral);
        assert_eq!(res.pronoun, Some(PronounKind::Personal));
    }

    #[test]
    fn lookup_unknown_token() {
        let lex = lex();
        assert!(matches!(
            lex.lookup("flurgs", Lang::En),
            Err(LexiconError::UnknownToken(t)) if t == "flurgs"
        ));
    }

    #[test]
    fn lookup_bound_morpheme_diagnostic() {
        let lex = lex();
        let res = lex.lookup("Billiethēkē", Lang::Bn).unwrap();
        assert_eq!(res.base, "Billie");
        assert!(res
            .stripped
            .iter()
            .any(|m| matches!(m, Marker::Bound(s) if s == "thēkē")));
    }

    #[test]
    fn bijection_paper_pair() {
        let lex = lex();
        let s_e = ["Millie", "eats", "rice"].map(String::from);
        let s_b = ["Millie", "khāẏa", "bhāta"].map(String::from);
        assert!(lex.check_bijection(&s_e, &s_b).is_bijective());
    }

    #[test]
    fn bijection_fails_on_copula() {
        let lex = lex();
        let s_e = ["Billie", "is", "handsome"].map(String::from);
        let s_b = ["Billie", "sudarśana"].map(String::from);
        match lex.check_bijection(&s_e, &s_b) {
            BijectionOutcome::Failure { witness } => assert_eq!(witness, "is"),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn bijection_empty_sets() {
        let lex = lex();
        assert!(lex.check_bijection(&[], &[]).is_bijective());
    }

    #[test]
    fn bijection_handles_case_marked_repeats() {
        let lex = lex();
        let s_e = ["Millie", "loves", "Billie"].map(String::from);
        let s_b = ["Millie", "Billiekē", "bhālōbāsē"].map(String::from);
        assert!(lex.check_bijection(&s_e, &s_b).is_bijective());
    }

    #[test]
    fn surjection_holds_without_copula() {
        let lex = lex();
        let s_e = ["Billie", "is", "handsome"].map(String::from);
        let s_b = ["Billie", "sudarśana"].map(String::from);
        assert!(lex.check_surjection_condition(&s_e, &s_b).holds());
    }

    #[test]
    fn surjection_maps_to_onto_prati() {
        let lex = lex();
        let s_e = ["Millie", "gives", "to", "Billie", "chocolate"].map(String::from);
        let s_b = ["Millie", "dēẏa", "prati", "Billiekē", "chocolate"].map(String::from);
        match lex.check_surjection_condition(&s_e, &s_b) {
            SurjectionOutcome::Holds(corr) => assert!(corr.maps("to", "prati")),
            other => panic!("expected holds, got {other:?}"),
        }
    }

    #[test]
    fn surjection_witness_is_the_unmapped_verb() {
        let lex = lex();
        let s_e = ["it", "drizzles"].map(String::from);
        match lex.check_surjection_condition(&s_e, &[]) {
            SurjectionOutcome::Failure { witness } => assert_eq!(witness, "drizzles"),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn bijection_implies_surjection_condition() {
        let lex = lex();
        let pairs: [(&[&str], &[&str]); 2] = [
            (&["Millie", "eats", "rice"], &["Millie", "khāẏa", "bhāta"]),
            (
                &["Millie", "loves", "Billie"],
                &["Millie", "Billiekē", "bhālōbāsē"],
            ),
        ];
        for (e, b) in pairs {
            let s_e: Vec<String> = e.iter().map(|s| s.to_string()).collect();
            let s_b: Vec<String> = b.iter().map(|s| s.to_string()).collect();
            if lex.check_bijection(&s_e, &s_b).is_bijective() {
                assert!(lex.check_surjection_condition(&s_e, &s_b).holds());
            }
        }
    }

    #[test]
    fn morphology_accusative_on_animate_object() {
        let lex = lex();
        let res = lex.lookup("Billie", Lang::Bn).unwrap();
        let entry = lex.entry(res.rows[0]);
        let mut attrs = NounAttributes::default();
        attrs.animacy = Animacy::Animate;
        let surface = lex
            .apply_morphology(entry, SyntacticRole::DirectObject, &attrs, Lang::Bn)
            .unwrap();
        assert_eq!(surface, "Billiekē");
        attrs.animacy = Animacy::Inanimate;
        let surface = lex
            .apply_morphology(entry, SyntacticRole::DirectObject, &attrs, Lang::Bn)
            .unwrap();
        assert_eq!(surface, "Billie");
    }

    #[test]
    fn morphology_unknown_animacy_is_an_error() {
        let lex = lex();
        let res = lex.lookup("Billie", Lang::Bn).unwrap();
        let entry = lex.entry(res.rows[0]);
        let attrs = NounAttributes::default();
        assert!(matches!(
            lex.apply_morphology(entry, SyntacticRole::DirectObject, &attrs, Lang::Bn),
            Err(MorphError::MissingAttribute { attribute: "animacy", .. })
        ));
    }

    #[test]
    fn morphology_honorific_agreement() {
        let lex = lex();
        let res = lex.lookup("khāẏa", Lang::Bn).unwrap();
        let entry = lex.entry(res.rows[0]);
        let mut attrs = NounAttributes::default();
        attrs.honorific = Honorific::Formal;
        assert_eq!(
            lex.apply_morphology(entry, SyntacticRole::Verb, &attrs, Lang::Bn)
                .unwrap(),
            "khan"
        );
        attrs.honorific = Honorific::Neutral;
        assert_eq!(
            lex.apply_morphology(entry, SyntacticRole::Verb, &attrs, Lang::Bn)
                .unwrap(),
            "khay"
        );
        attrs.honorific = Honorific::Unknown;
        assert_eq!(
            lex.apply_morphology(entry, SyntacticRole::Verb, &attrs, Lang::Bn)
                .unwrap(),
            "khāẏa"
        );
    }

    #[test]
    fn pronoun_realization_needs_gender_for_english() {
        let lex = lex();
        let mut attrs = NounAttributes::default();
        attrs.animacy = Animacy::Animate;
        assert!(matches!(
            lex.realize_pronoun(PronounKind::Personal, SyntacticRole::Subject, &attrs, Lang::En),
            Err(MorphError::AmbiguousPronoun(_))
        ));
        attrs.gender = Gender::Male;
        assert_eq!(
            lex.realize_pronoun(PronounKind::Personal, SyntacticRole::Subject, &attrs, Lang::En)
                .unwrap(),
            "he"
        );
        // Bengali collapses the gender distinction, so no ambiguity there.
        attrs.gender = Gender::Unknown;
        assert_eq!(
            lex.realize_pronoun(PronounKind::Personal, SyntacticRole::Subject, &attrs, Lang::Bn)
                .unwrap(),
            "sē"
        );
    }

    #[test]
    fn pronoun_reflexive_by_subject_gender() {
        let lex = lex();
        let mut attrs = NounAttributes::default();
        attrs.animacy = Animacy::Animate;
        attrs.gender = Gender::Female;
        assert_eq!(
            lex.realize_pronoun(
                PronounKind::Reflexive,
                SyntacticRole::DirectObject,
                &attrs,
                Lang::En
            )
            .unwrap(),
            "herself"
        );
        assert_eq!(
            lex.realize_pronoun(
                PronounKind::Reflexive,
                SyntacticRole::DirectObject,
                &attrs,
                Lang::Bn
            )
            .unwrap(),
            "nijēkē"
        );
    }

    #[test]
    fn attribute_refinement_is_monotone() {
        let mut attrs = NounAttributes::default();
        assert!(attrs.refine(AttrAssign::Gender(Gender::Male)).unwrap());
        assert!(!attrs.refine(AttrAssign::Gender(Gender::Male)).unwrap());
        assert!(attrs.refine(AttrAssign::Gender(Gender::Female)).is_err());
        // Unknown never overwrites a concrete value.
        assert!(!attrs.refine(AttrAssign::Gender(Gender::Unknown)).unwrap());
        assert_eq!(attrs.gender, Gender::Male);
    }

    #[test]
    fn strip_apply_round_trip_over_marker_forms() {
        let lex = lex();
        for (ix, entry) in lex.entries().iter().enumerate() {
            let cases: Vec<(Option<&String>, SyntacticRole, NounAttributes)> = vec![
                (entry.forms.accusative.as_ref(), SyntacticRole::DirectObject, {
                    let mut a = NounAttributes::default();
                    a.animacy = Animacy::Animate;
                    a
                }),
                (
                    entry.forms.genitive.as_ref(),
                    SyntacticRole::RecipientGenitive,
                    NounAttributes::default(),
                ),
                (entry.forms.female.as_ref(), SyntacticRole::Modifier, {
                    let mut a = NounAttributes::default();
                    a.gender = Gender::Female;
                    a
                }),
                (entry.forms.hon_neutral.as_ref(), SyntacticRole::Verb, {
                    let mut a = NounAttributes::default();
                    a.honorific = Honorific::Neutral;
                    a
                }),
                (entry.forms.hon_formal.as_ref(), SyntacticRole::Verb, {
                    let mut a = NounAttributes::default();
                    a.honorific = Honorific::Formal;
                    a
                }),
            ];
            for (form, role, attrs) in cases {
                let Some(form) = form else { continue };
                let back = lex.lookup(form, Lang::Bn).unwrap();
                assert!(back.rows.contains(&ix), "{form} resolves to its row");
                let applied = lex.apply_morphology(entry, role, &attrs, Lang::Bn).unwrap();
                assert_eq!(&applied, form, "apply(lookup({form})) round-trips");
            }
        }
    }

    #[test]
    fn tokenize_merges_idioms_longest_first() {
        let lex = lex();
        let toks = lex.tokenize(Lang::En, "Billie kicks the bucket.");
        assert_eq!(toks, vec!["Billie", "kicks the bucket"]);
        let res = lex.lookup("kicks the bucket", Lang::En).unwrap();
        assert!(res.idiom);
        assert!(res.one_sided);
    }
}
