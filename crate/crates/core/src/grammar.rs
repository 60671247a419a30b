//! Hybrid-grammar rewrite system: symbols, production rules, a bottom-up
//! chart parser over the fragment, leaf-yield linearization, and the
//! cross-sentence pronominal merge operations that make the grammar
//! "hybrid" rather than plainly context-free.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use crate::lexicon::{
    Lexicon, LookupResult, Marker, NounAttributes, PronounKind, SyntacticRole,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Lang {
    En,
    Bn,
}

impl fmt::Display for Lang {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lang::En => write!(f, "en"),
            Lang::Bn => write!(f, "bn"),
        }
    }
}

impl std::str::FromStr for Lang {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "en" => Ok(Lang::En),
            "bn" => Ok(Lang::Bn),
            other => Err(format!("unknown language `{other}`")),
        }
    }
}

/// The closed category inventory of the fragment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    S,
    Np,
    Tvp,
    Ivp,
    Adj,
    Adv,
    Adp,
    Cnj,
    Scv,
}

impl Category {
    pub const ALL: [Category; 9] = [
        Category::S,
        Category::Np,
        Category::Tvp,
        Category::Ivp,
        Category::Adj,
        Category::Adv,
        Category::Adp,
        Category::Cnj,
        Category::Scv,
    ];

    pub fn parse(name: &str) -> Option<Category> {
        match name {
            "S" => Some(Category::S),
            "NP" => Some(Category::Np),
            "TVP" => Some(Category::Tvp),
            "IVP" => Some(Category::Ivp),
            "ADJ" => Some(Category::Adj),
            "ADV" => Some(Category::Adv),
            "ADP" => Some(Category::Adp),
            "CNJ" => Some(Category::Cnj),
            "SCV" => Some(Category::Scv),
            _ => None,
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Category::S => "S",
            Category::Np => "NP",
            Category::Tvp => "TVP",
            Category::Ivp => "IVP",
            Category::Adj => "ADJ",
            Category::Adv => "ADV",
            Category::Adp => "ADP",
            Category::Cnj => "CNJ",
            Category::Scv => "SCV",
        };
        write!(f, "{s}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Symbol {
    Terminal { surface: String, lang: Lang },
    NonTerminal(Category),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(pub String);

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProductionRule {
    pub lhs: Category,
    pub rhs: Vec<Symbol>,
    pub id: RuleId,
}

#[derive(Debug, Clone)]
pub struct Grammar {
    pub language: Lang,
    rules: Vec<ProductionRule>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("grammar line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("grammar line {line}: unknown category `{name}`")]
    UnknownCategory { line: usize, name: String },
    #[error("non-terminal {0} is reachable from S but has no rule")]
    UnreachableNonTerminal(Category),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("no parse for the token sequence")]
    NoParse,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MergeError {
    #[error("the clauses share no noun in the positions the link requires")]
    NoSharedNoun,
    #[error("link {0:?} is not defined for these clause shapes")]
    UnsupportedLink(LinkKind),
}

/// Pronominal link kinds between two clauses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// Subject-subject or object-object link via a personal pronoun.
    Personal,
    /// Object of the first clause is the subject of the second; the second
    /// occurrence becomes the relative pronoun.
    RelativeSubject,
    /// Both clauses share their subject; the relative clause is embedded
    /// after the subject and a resumptive pronoun opens the main clause.
    RelativeResumptive,
    /// Both clauses share their object; the second occurrence becomes the
    /// fronted object relative pronoun.
    RelativeObject,
    /// One clause whose subject and object are the same noun; the object
    /// becomes a reflexive pronoun.
    Reflexive,
}

/// Path from the root of a tree to a node: child indices.
pub type TreePath = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkAnnotation {
    pub kind: LinkKind,
    pub antecedent: TreePath,
}

/// Terminal leaf, carrying what the lexicon said about the surface so the
/// tree stays self-contained.
#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub surface: String,
    pub lang: Lang,
    /// Category the leaf fills; absent for quoted rule literals like "is".
    pub cat: Option<Category>,
    /// Base form in the leaf's own language after stripping.
    pub base: String,
    /// Base form on the English side, when the entry has one.
    pub en_base: Option<String>,
    /// Base form on the Bengali side, when the entry has one.
    pub bn_base: Option<String>,
    pub stripped: Vec<Marker>,
    pub attrs: NounAttributes,
    pub entry_attrs: NounAttributes,
    pub pronoun: Option<PronounKind>,
    pub gender_agreeing: bool,
    pub one_sided: bool,
    pub idiom: bool,
    pub rows: Vec<usize>,
    pub link: Option<LinkAnnotation>,
}

impl Leaf {
    pub fn literal(surface: &str, lang: Lang) -> Leaf {
        Leaf {
            surface: surface.to_string(),
            lang,
            cat: None,
            base: surface.to_string(),
            en_base: None,
            bn_base: None,
            stripped: Vec::new(),
            attrs: NounAttributes::default(),
            entry_attrs: NounAttributes::default(),
            pronoun: None,
            gender_agreeing: false,
            one_sided: true,
            idiom: false,
            rows: Vec::new(),
            link: None,
        }
    }

    pub fn from_lookup(surface: &str, lang: Lang, cat: Category, res: &LookupResult) -> Leaf {
        Leaf {
            surface: surface.to_string(),
            lang,
            cat: Some(cat),
            base: res.base.clone(),
            en_base: res.en_base.clone(),
            bn_base: res.bn_base.clone(),
            stripped: res.stripped.clone(),
            attrs: res.attrs,
            entry_attrs: res.entry_attrs,
            pronoun: res.pronoun,
            gender_agreeing: res.gender_agreeing,
            one_sided: res.one_sided,
            idiom: res.idiom,
            rows: res.rows.clone(),
            link: None,
        }
    }

    /// Base form in the given language, falling back to the surface.
    pub fn base_in(&self, lang: Lang) -> &str {
        let side = match lang {
            Lang::En => self.en_base.as_deref(),
            Lang::Bn => self.bn_base.as_deref(),
        };
        side.unwrap_or(&self.base)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf(Leaf),
    /// Internal node produced by expanding a production rule.
    Rule { cat: Category, rule: RuleId },
    /// Internal node produced by a pronominal merge, not by a rule.
    Link { cat: Category, kind: LinkKind },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseTree {
    pub node: Node,
    pub children: Vec<ParseTree>,
}

impl ParseTree {
    pub fn leaf(leaf: Leaf) -> ParseTree {
        ParseTree {
            node: Node::Leaf(leaf),
            children: Vec::new(),
        }
    }

    pub fn category(&self) -> Option<Category> {
        match &self.node {
            Node::Leaf(l) => l.cat,
            Node::Rule { cat, .. } | Node::Link { cat, .. } => Some(*cat),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.node, Node::Leaf(_))
    }

    /// Leaves in left-to-right order, with their paths from this node.
    pub fn leaves(&self) -> Vec<(TreePath, &Leaf)> {
        let mut out = Vec::new();
        fn walk<'t>(t: &'t ParseTree, path: &mut TreePath, out: &mut Vec<(TreePath, &'t Leaf)>) {
            match &t.node {
                Node::Leaf(l) => out.push((path.clone(), l)),
                _ => {
                    for (i, c) in t.children.iter().enumerate() {
                        path.push(i);
                        walk(c, path, out);
                        path.pop();
                    }
                }
            }
        }
        walk(self, &mut Vec::new(), &mut out);
        out
    }

    pub fn node_at(&self, path: &[usize]) -> Option<&ParseTree> {
        let mut cur = self;
        for &i in path {
            cur = cur.children.get(i)?;
        }
        Some(cur)
    }

    fn node_at_mut(&mut self, path: &[usize]) -> Option<&mut ParseTree> {
        let mut cur = self;
        for &i in path {
            cur = cur.children.get_mut(i)?;
        }
        Some(cur)
    }

    /// Every rule expansion in the tree must replay against the grammar,
    /// and every link annotation must resolve to a leaf.
    pub fn validate(&self, grammar: &Grammar) -> bool {
        fn walk(t: &ParseTree, g: &Grammar, root: &ParseTree) -> bool {
            match &t.node {
                Node::Leaf(l) => match &l.link {
                    Some(ann) => matches!(
                        root.node_at(&ann.antecedent).map(|n| n.is_leaf()),
                        Some(true)
                    ),
                    None => true,
                },
                Node::Rule { cat, rule } => {
                    let Some(r) = g.rule(rule) else { return false };
                    if r.lhs != *cat || r.rhs.len() != t.children.len() {
                        return false;
                    }
                    for (sym, child) in r.rhs.iter().zip(&t.children) {
                        let ok = match sym {
                            Symbol::Terminal { surface, .. } => matches!(
                                &child.node,
                                Node::Leaf(l) if l.cat.is_none() && &l.surface == surface
                            ),
                            Symbol::NonTerminal(c) => child.category() == Some(*c),
                        };
                        if !ok {
                            return false;
                        }
                    }
                    t.children.iter().all(|c| walk(c, g, root))
                }
                // Link nodes come from merges, not rules.
                Node::Link { .. } => t.children.iter().all(|c| walk(c, g, root)),
            }
        }
        walk(self, grammar, self)
    }
}

/// Leaf yield of a tree, left to right.
pub fn linearize(tree: &ParseTree) -> Vec<String> {
    tree.leaves()
        .into_iter()
        .map(|(_, l)| l.surface.clone())
        .collect()
}

impl Grammar {
    pub fn start(&self) -> Category {
        Category::S
    }

    pub fn rules(&self) -> &[ProductionRule] {
        &self.rules
    }

    pub fn rule(&self, id: &RuleId) -> Option<&ProductionRule> {
        self.rules.iter().find(|r| &r.id == id)
    }

    pub fn rules_for(&self, cat: Category) -> impl Iterator<Item = &ProductionRule> {
        self.rules.iter().filter(move |r| r.lhs == cat)
    }

    /// Quoted terminals appearing on rule right-hand sides.
    pub fn literals(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for r in &self.rules {
            for s in &r.rhs {
                if let Symbol::Terminal { surface, .. } = s {
                    if !out.contains(&surface.as_str()) {
                        out.push(surface.as_str());
                    }
                }
            }
        }
        out
    }
}

/// Parse the grammar file format: one `LHS -> SYM SYM ...` per line,
/// `#` comments, terminals quoted.
pub fn load_grammar(language: Lang, text: &str) -> Result<Grammar, GrammarError> {
    let mut rules = Vec::new();
    for (ix, raw) in text.lines().enumerate() {
        let line = ix + 1;
        let trimmed = raw.split('#').next().unwrap_or("").trim();
        if trimmed.is_empty() {
            continue;
        }
        let (lhs_text, rhs_text) =
            trimmed
                .split_once("->")
                .ok_or_else(|| GrammarError::Syntax {
                    line,
                    msg: "expected `LHS -> SYM ...`".into(),
                })?;
        let lhs_name = lhs_text.trim();
        let lhs = Category::parse(lhs_name).ok_or_else(|| GrammarError::UnknownCategory {
            line,
            name: lhs_name.to_string(),
        })?;
        let mut rhs = Vec::new();
        for tok in rhs_text.split_whitespace() {
            if let Some(quoted) = tok.strip_prefix('"') {
                let surface = quoted
                    .strip_suffix('"')
                    .ok_or_else(|| GrammarError::Syntax {
                        line,
                        msg: format!("unterminated terminal `{tok}`"),
                    })?;
                rhs.push(Symbol::Terminal {
                    surface: surface.to_string(),
                    lang: language,
                });
            } else {
                let cat = Category::parse(tok).ok_or_else(|| GrammarError::UnknownCategory {
                    line,
                    name: tok.to_string(),
                })?;
                rhs.push(Symbol::NonTerminal(cat));
            }
        }
        if rhs.is_empty() {
            return Err(GrammarError::Syntax {
                line,
                msg: "empty right-hand side".into(),
            });
        }
        let id = RuleId(format!("{language}.{:02}", rules.len() + 1));
        rules.push(ProductionRule { lhs, rhs, id });
    }
    let grammar = Grammar { language, rules };
    // Every non-terminal reachable from S needs rules; categories other
    // than S may instead be realized by lexicon words.
    if grammar.rules_for(Category::S).next().is_none() {
        return Err(GrammarError::UnreachableNonTerminal(Category::S));
    }
    Ok(grammar)
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone)]
struct Item {
    tree: ParseTree,
    /// Pre-order rule-id sequence, the ambiguity tie-break key.
    key: Vec<RuleId>,
}

/// Bottom-up chart parse. Of all derivations of the full span, the one
/// with the lexicographically smallest pre-order rule-id sequence wins.
pub fn parse(grammar: &Grammar, tokens: &[String], lex: &Lexicon) -> Result<ParseTree, ParseError> {
    if tokens.is_empty() {
        return Err(ParseError::NoParse);
    }
    let lang = grammar.language;
    let literals = grammar.literals();
    // Lexical seeds: one item per (token, category reading).
    let mut seeds: Vec<Vec<Item>> = Vec::with_capacity(tokens.len());
    for tok in tokens {
        let mut cell = Vec::new();
        for res in lex.candidates(tok, lang) {
            let leaf = Leaf::from_lookup(tok, lang, res.pos, &res);
            cell.push(Item {
                key: Vec::new(),
                tree: ParseTree::leaf(leaf),
            });
        }
        if cell.is_empty() && !literals.contains(&tok.as_str()) {
            return Err(ParseError::UnknownToken(tok.clone()));
        }
        seeds.push(cell);
    }
    let n = tokens.len();
    // chart[(cat, i, j)] = items spanning tokens[i..j].
    let mut chart: HashMap<(Category, usize, usize), Vec<Item>> = HashMap::new();
    for (i, cell) in seeds.iter().enumerate() {
        for item in cell {
            let cat = item.tree.category().expect("seed has category");
            push_item(&mut chart, (cat, i, i + 1), item.clone());
        }
    }
    for width in 1..=n {
        // Iterate to a fixpoint within each width so that unary-ish chains
        // (none in the fragment, but harmless) and newly added items of the
        // same width are seen.
        let mut changed = true;
        while changed {
            changed = false;
            for start in 0..=(n - width) {
                let end = start + width;
                for rule in grammar.rules() {
                    for item in match_rule(grammar, rule, tokens, &chart, start, end) {
                        if push_item(&mut chart, (rule.lhs, start, end), item) {
                            changed = true;
                        }
                    }
                }
            }
        }
    }
    chart
        .remove(&(Category::S, 0, n))
        .and_then(|items| items.into_iter().min_by(|a, b| a.key.cmp(&b.key)))
        .map(|item| item.tree)
        .ok_or(ParseError::NoParse)
}

fn push_item(
    chart: &mut HashMap<(Category, usize, usize), Vec<Item>>,
    key: (Category, usize, usize),
    item: Item,
) -> bool {
    let cell = chart.entry(key).or_default();
    // Keep one item per distinct tree; prefer the smaller tie-break key.
    for existing in cell.iter_mut() {
        if existing.tree == item.tree {
            return false;
        }
    }
    cell.push(item);
    true
}

fn match_rule(
    grammar: &Grammar,
    rule: &ProductionRule,
    tokens: &[String],
    chart: &HashMap<(Category, usize, usize), Vec<Item>>,
    start: usize,
    end: usize,
) -> Vec<Item> {
    let mut results = Vec::new();
    fn rec(
        grammar: &Grammar,
        rule: &ProductionRule,
        tokens: &[String],
        chart: &HashMap<(Category, usize, usize), Vec<Item>>,
        sym_ix: usize,
        pos: usize,
        end: usize,
        acc: &mut Vec<Item>,
        results: &mut Vec<Item>,
    ) {
        if sym_ix == rule.rhs.len() {
            if pos == end {
                let children: Vec<ParseTree> = acc.iter().map(|i| i.tree.clone()).collect();
                // Guard against a rule reproducing exactly one child of the
                // same category and span (cannot happen with len >= 2 rhs).
                let mut key = vec![rule.id.clone()];
                for item in acc.iter() {
                    key.extend(item.key.iter().cloned());
                }
                results.push(Item {
                    tree: ParseTree {
                        node: Node::Rule {
                            cat: rule.lhs,
                            rule: rule.id.clone(),
                        },
                        children,
                    },
                    key,
                });
            }
            return;
        }
        match &rule.rhs[sym_ix] {
            Symbol::Terminal { surface, .. } => {
                if pos < end && &tokens[pos] == surface {
                    acc.push(Item {
                        tree: ParseTree::leaf(Leaf::literal(surface, grammar.language)),
                        key: Vec::new(),
                    });
                    rec(grammar, rule, tokens, chart, sym_ix + 1, pos + 1, end, acc, results);
                    acc.pop();
                }
            }
            Symbol::NonTerminal(cat) => {
                let remaining = rule.rhs.len() - sym_ix - 1;
                for next in (pos + 1)..=(end - remaining) {
                    if let Some(items) = chart.get(&(*cat, pos, next)) {
                        for item in items.clone() {
                            acc.push(item);
                            rec(
                                grammar, rule, tokens, chart, sym_ix + 1, next, end, acc, results,
                            );
                            acc.pop();
                        }
                    }
                }
            }
        }
    }
    if rule.rhs.len() <= end - start {
        rec(
            grammar,
            rule,
            tokens,
            chart,
            0,
            start,
            end,
            &mut Vec::new(),
            &mut results,
        );
    }
    results
}

// ---------------------------------------------------------------------------
// Clause shapes

/// The structural reading of a rule's right-hand side, shared by the
/// diagram builder and the target linearizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClauseShape {
    /// subject, verb, object positions
    Transitive {
        subj: usize,
        verb: usize,
        obj: usize,
    },
    Intransitive {
        subj: usize,
        verb: usize,
    },
    /// Adjective predication; `copula` is the quoted-literal slot if any.
    Predication {
        subj: usize,
        adj: usize,
        copula: Option<usize>,
    },
    /// Three-participant clause; `adp` present iff the postposition is
    /// explicit, otherwise the recipient carries the case marker.
    Ditransitive {
        subj: usize,
        verb: usize,
        obj: usize,
        recipient: usize,
        adp: Option<usize>,
    },
    /// Intransitive with an oblique adposition phrase.
    Oblique {
        subj: usize,
        verb: usize,
        adp: usize,
        oblique: usize,
    },
    /// Sentential-complement verb.
    Complement {
        subj: usize,
        scv: usize,
        clause: usize,
    },
    ClauseConjunction {
        left: usize,
        cnj: usize,
        right: usize,
    },
    AttributiveAdjective {
        adj: usize,
        np: usize,
    },
    NounConjunction {
        left: usize,
        cnj: usize,
        right: usize,
    },
    AdverbPhrase {
        adv: usize,
        vp: usize,
    },
}

/// Classify a rule by the category sequence of its right-hand side.
pub fn clause_shape(rule: &ProductionRule) -> Option<ClauseShape> {
    use Category::*;
    let pat: Vec<Option<Category>> = rule
        .rhs
        .iter()
        .map(|s| match s {
            Symbol::NonTerminal(c) => Some(*c),
            Symbol::Terminal { .. } => None,
        })
        .collect();
    let shape = match (rule.lhs, pat.as_slice()) {
        (S, [Some(Np), Some(Tvp), Some(Np)]) => ClauseShape::Transitive {
            subj: 0,
            verb: 1,
            obj: 2,
        },
        (S, [Some(Np), Some(Np), Some(Tvp)]) => ClauseShape::Transitive {
            subj: 0,
            obj: 1,
            verb: 2,
        },
        (S, [Some(Np), Some(Ivp)]) => ClauseShape::Intransitive { subj: 0, verb: 1 },
        (S, [Some(Np), None, Some(Adj)]) => ClauseShape::Predication {
            subj: 0,
            adj: 2,
            copula: Some(1),
        },
        (S, [Some(Np), Some(Adj)]) => ClauseShape::Predication {
            subj: 0,
            adj: 1,
            copula: None,
        },
        (S, [Some(Np), Some(Tvp), Some(Np), Some(Adp), Some(Np)]) => ClauseShape::Ditransitive {
            subj: 0,
            verb: 1,
            obj: 2,
            recipient: 4,
            adp: Some(3),
        },
        (S, [Some(Np), Some(Np), Some(Np), Some(Tvp)]) => ClauseShape::Ditransitive {
            subj: 0,
            recipient: 1,
            obj: 2,
            verb: 3,
            adp: None,
        },
        (S, [Some(Np), Some(Np), Some(Adp), Some(Np), Some(Tvp)]) => ClauseShape::Ditransitive {
            subj: 0,
            recipient: 1,
            adp: Some(2),
            obj: 3,
            verb: 4,
        },
        (S, [Some(Np), Some(Ivp), Some(Adp), Some(Np)]) => ClauseShape::Oblique {
            subj: 0,
            verb: 1,
            adp: 2,
            oblique: 3,
        },
        (S, [Some(Np), Some(Scv), Some(S)]) => ClauseShape::Complement {
            subj: 0,
            scv: 1,
            clause: 2,
        },
        (S, [Some(Np), Some(S), Some(Scv)]) => ClauseShape::Complement {
            subj: 0,
            clause: 1,
            scv: 2,
        },
        (S, [Some(S), Some(Cnj), Some(S)]) => ClauseShape::ClauseConjunction {
            left: 0,
            cnj: 1,
            right: 2,
        },
        (Np, [Some(Adj), Some(Np)]) => ClauseShape::AttributiveAdjective { adj: 0, np: 1 },
        (Np, [Some(Np), Some(Cnj), Some(Np)]) => ClauseShape::NounConjunction {
            left: 0,
            cnj: 1,
            right: 2,
        },
        (Tvp, [Some(Adv), Some(Tvp)]) | (Ivp, [Some(Adv), Some(Ivp)]) => {
            ClauseShape::AdverbPhrase { adv: 0, vp: 1 }
        }
        (Tvp, [Some(Tvp), Some(Adv)]) | (Ivp, [Some(Ivp), Some(Adv)]) => {
            ClauseShape::AdverbPhrase { adv: 1, vp: 0 }
        }
        _ => return None,
    };
    Some(shape)
}

/// Head noun leaf of an NP subtree (skipping attributive adjectives and
/// taking the left operand of a noun conjunction).
pub fn head_noun(tree: &ParseTree) -> Option<TreePath> {
    match &tree.node {
        Node::Leaf(l) if l.cat == Some(Category::Np) => Some(Vec::new()),
        Node::Rule { rule: _, cat } if *cat == Category::Np => {
            for (i, child) in tree.children.iter().enumerate() {
                if child.category() == Some(Category::Np) {
                    let mut path = vec![i];
                    path.extend(head_noun(child)?);
                    return Some(path);
                }
            }
            None
        }
        _ => None,
    }
}

fn prepend(prefix: &[usize], path: TreePath) -> TreePath {
    let mut out = prefix.to_vec();
    out.extend(path);
    out
}

/// Subject, object, and recipient head-noun paths of a simple clause.
#[derive(Debug, Clone)]
pub struct ClauseNouns {
    pub subject: TreePath,
    pub object: Option<TreePath>,
    pub recipient: Option<TreePath>,
}

pub fn clause_noun_roles(tree: &ParseTree, grammar: &Grammar) -> Option<ClauseNouns> {
    let Node::Rule { rule, .. } = &tree.node else {
        return None;
    };
    let shape = clause_shape(grammar.rule(rule)?)?;
    let (subj_ix, obj_ix, rec_ix) = match shape {
        ClauseShape::Transitive { subj, obj, .. } => (subj, Some(obj), None),
        ClauseShape::Intransitive { subj, .. } => (subj, None, None),
        ClauseShape::Predication { subj, .. } => (subj, None, None),
        ClauseShape::Ditransitive {
            subj,
            obj,
            recipient,
            ..
        } => (subj, Some(obj), Some(recipient)),
        ClauseShape::Oblique { subj, .. } => (subj, None, None),
        _ => return None,
    };
    let at = |ix: usize| -> Option<TreePath> {
        Some(prepend(&[ix], head_noun(&tree.children[ix])?))
    };
    Some(ClauseNouns {
        subject: at(subj_ix)?,
        object: match obj_ix {
            Some(ix) => Some(at(ix)?),
            None => None,
        },
        recipient: match rec_ix {
            Some(ix) => Some(at(ix)?),
            None => None,
        },
    })
}

fn leaf_at<'t>(tree: &'t ParseTree, path: &[usize]) -> Option<&'t Leaf> {
    match &tree.node_at(path)?.node {
        Node::Leaf(l) => Some(l),
        _ => None,
    }
}

fn same_noun(a: &Leaf, b: &Leaf) -> bool {
    a.base_in(a.lang) == b.base_in(b.lang)
}

fn pronoun_leaf(
    lex: &Lexicon,
    lang: Lang,
    kind: PronounKind,
    role: SyntacticRole,
    attrs: &NounAttributes,
    link: LinkAnnotation,
) -> Result<Leaf, MergeError> {
    let surface = lex
        .realize_pronoun(kind, role, attrs, lang)
        .map_err(|_| MergeError::UnsupportedLink(link.kind))?;
    let res = lex
        .lookup(&surface, lang)
        .expect("realized pronoun is in the lexicon");
    let mut leaf = Leaf::from_lookup(&surface, lang, Category::Np, &res);
    // The wire identity comes from the link, not the pronoun's own entry.
    leaf.attrs = *attrs;
    leaf.link = Some(link);
    Ok(leaf)
}

/// Merge two clauses (or fold one, for the reflexive link) by replacing the
/// repeated noun with the appropriate pronoun for the trees' language.
/// For the reflexive kind the second tree is ignored.
pub fn merge_pronominal(
    t1: &ParseTree,
    t2: &ParseTree,
    kind: LinkKind,
    grammar: &Grammar,
    lex: &Lexicon,
) -> Result<ParseTree, MergeError> {
    let lang = grammar.language;
    let unsupported = || MergeError::UnsupportedLink(kind);
    match kind {
        LinkKind::Reflexive => {
            let roles = clause_noun_roles(t1, grammar).ok_or_else(unsupported)?;
            let (subj, obj) = (roles.subject, roles.object.ok_or_else(unsupported)?);
            let subj_leaf = leaf_at(t1, &subj).ok_or_else(unsupported)?.clone();
            let obj_leaf = leaf_at(t1, &obj).ok_or_else(unsupported)?;
            if !same_noun(&subj_leaf, obj_leaf) {
                return Err(MergeError::NoSharedNoun);
            }
            let mut out = t1.clone();
            let leaf = pronoun_leaf(
                lex,
                lang,
                PronounKind::Reflexive,
                SyntacticRole::DirectObject,
                &subj_leaf.attrs,
                LinkAnnotation {
                    kind,
                    antecedent: subj,
                },
            )?;
            *out.node_at_mut(&obj).unwrap() = ParseTree::leaf(leaf);
            return Ok(out);
        }
        _ => {}
    }
    let roles1 = clause_noun_roles(t1, grammar).ok_or_else(unsupported)?;
    let roles2 = clause_noun_roles(t2, grammar).ok_or_else(unsupported)?;
    let (subj1, obj1) = (roles1.subject.clone(), roles1.object.clone());
    let (subj2, obj2) = (roles2.subject.clone(), roles2.object.clone());
    let compound = |left: ParseTree, right: ParseTree| ParseTree {
        node: Node::Link {
            cat: Category::S,
            kind,
        },
        children: vec![left, right],
    };
    match kind {
        LinkKind::Personal => {
            // Prefer the subject-subject link, then object-object.
            let s1 = leaf_at(t1, &subj1).ok_or_else(unsupported)?;
            let s2 = leaf_at(t2, &subj2).ok_or_else(unsupported)?;
            if same_noun(s1, s2) {
                let attrs = s1.attrs;
                let antecedent = prepend(&[0], subj1);
                let mut right = t2.clone();
                let leaf = pronoun_leaf(
                    lex,
                    lang,
                    PronounKind::Personal,
                    SyntacticRole::Subject,
                    &attrs,
                    LinkAnnotation { kind, antecedent },
                )?;
                *right.node_at_mut(&subj2).unwrap() = ParseTree::leaf(leaf);
                return Ok(compound(t1.clone(), right));
            }
            let (o1, o2) = match (&obj1, &obj2) {
                (Some(a), Some(b)) => (a.clone(), b.clone()),
                _ => return Err(MergeError::NoSharedNoun),
            };
            let o1_leaf = leaf_at(t1, &o1).ok_or_else(unsupported)?;
            let o2_leaf = leaf_at(t2, &o2).ok_or_else(unsupported)?;
            if !same_noun(o1_leaf, o2_leaf) {
                return Err(MergeError::NoSharedNoun);
            }
            let attrs = o1_leaf.attrs;
            let antecedent = prepend(&[0], o1);
            let mut right = t2.clone();
            let leaf = pronoun_leaf(
                lex,
                lang,
                PronounKind::Personal,
                SyntacticRole::DirectObject,
                &attrs,
                LinkAnnotation { kind, antecedent },
            )?;
            *right.node_at_mut(&o2).unwrap() = ParseTree::leaf(leaf);
            Ok(compound(t1.clone(), right))
        }
        LinkKind::RelativeSubject => {
            let o1 = obj1.ok_or(MergeError::NoSharedNoun)?;
            let o1_leaf = leaf_at(t1, &o1).ok_or_else(unsupported)?;
            let s2_leaf = leaf_at(t2, &subj2).ok_or_else(unsupported)?;
            if !same_noun(o1_leaf, s2_leaf) {
                return Err(MergeError::NoSharedNoun);
            }
            let attrs = o1_leaf.attrs;
            let antecedent = prepend(&[0], o1);
            let mut right = t2.clone();
            let leaf = pronoun_leaf(
                lex,
                lang,
                PronounKind::Relative,
                SyntacticRole::Subject,
                &attrs,
                LinkAnnotation { kind, antecedent },
            )?;
            *right.node_at_mut(&subj2).unwrap() = ParseTree::leaf(leaf);
            Ok(compound(t1.clone(), right))
        }
        LinkKind::RelativeObject => {
            let o1 = obj1.ok_or(MergeError::NoSharedNoun)?;
            let o2 = obj2.ok_or(MergeError::NoSharedNoun)?;
            let o1_leaf = leaf_at(t1, &o1).ok_or_else(unsupported)?;
            let o2_leaf = leaf_at(t2, &o2).ok_or_else(unsupported)?;
            if !same_noun(o1_leaf, o2_leaf) {
                return Err(MergeError::NoSharedNoun);
            }
            let attrs = o1_leaf.attrs;
            let antecedent = prepend(&[0], o1);
            let mut right = t2.clone();
            let rel = pronoun_leaf(
                lex,
                lang,
                PronounKind::Relative,
                SyntacticRole::DirectObject,
                &attrs,
                LinkAnnotation { kind, antecedent },
            )?;
            *right.node_at_mut(&o2).unwrap() = ParseTree::leaf(rel);
            Ok(compound(t1.clone(), right))
        }
        LinkKind::RelativeResumptive => {
            // The resumptive construction is Bengali-specific; English uses
            // the plain relative link instead.
            if lang == Lang::En {
                return Err(unsupported());
            }
            let s1_leaf = leaf_at(t1, &subj1).ok_or_else(unsupported)?;
            let s2_leaf = leaf_at(t2, &subj2).ok_or_else(unsupported)?;
            if !same_noun(s1_leaf, s2_leaf) {
                return Err(MergeError::NoSharedNoun);
            }
            let attrs = s1_leaf.attrs;
            // First clause: the relative marker follows the shared subject.
            let mut left = t1.clone();
            let rel = pronoun_leaf(
                lex,
                lang,
                PronounKind::Relative,
                SyntacticRole::Subject,
                &attrs,
                LinkAnnotation {
                    kind,
                    antecedent: prepend(&[0], subj1.clone()),
                },
            )?;
            insert_after_leaf(&mut left, &subj1, ParseTree::leaf(rel));
            // Second clause: the main clause needs the resumptive pronoun to
            // point back at the shared subject.
            let mut right = t2.clone();
            let resumptive = pronoun_leaf(
                lex,
                lang,
                PronounKind::Personal,
                SyntacticRole::Subject,
                &attrs,
                LinkAnnotation {
                    kind,
                    antecedent: prepend(&[0], subj1.clone()),
                },
            )?;
            *right.node_at_mut(&subj2).unwrap() = ParseTree::leaf(resumptive);
            // A noun the second clause repeats from the first collapses to a
            // personal object pronoun as a secondary link.
            let repeated: Vec<TreePath> = [roles2.object.clone(), roles2.recipient.clone()]
                .into_iter()
                .flatten()
                .collect();
            if let Some(o1) = obj1.as_ref() {
                if let Some(a) = leaf_at(t1, o1).cloned() {
                    for o2 in repeated {
                        let Some(b) = leaf_at(&right, &o2).cloned() else {
                            continue;
                        };
                        if b.pronoun.is_none() && same_noun(&a, &b) {
                            let leaf = pronoun_leaf(
                                lex,
                                lang,
                                PronounKind::Personal,
                                SyntacticRole::DirectObject,
                                &a.attrs,
                                LinkAnnotation {
                                    kind: LinkKind::Personal,
                                    antecedent: prepend(&[0], o1.clone()),
                                },
                            )?;
                            *right.node_at_mut(&o2).unwrap() = ParseTree::leaf(leaf);
                        }
                    }
                }
            }
            Ok(compound(left, right))
        }
        LinkKind::Reflexive => unreachable!("handled above"),
    }
}

/// Wrap the subject NP so the relative marker sits right after it.
fn insert_after_leaf(tree: &mut ParseTree, path: &[usize], marker: ParseTree) {
    let target = tree.node_at_mut(path).expect("path resolves");
    let original = target.clone();
    *target = ParseTree {
        node: Node::Link {
            cat: Category::Np,
            kind: LinkKind::RelativeResumptive,
        },
        children: vec![original, marker],
    };
}

// ---------------------------------------------------------------------------
// Fragment enumeration (test and corpus support)

/// Deterministically enumerate token sequences the grammar accepts, for
/// round-trip checks. Expansion is bounded and recursion-free: compound
/// rules are skipped.
pub fn enumerate_sentences(grammar: &Grammar, lex: &Lexicon, limit: usize) -> Vec<Vec<String>> {
    let lang = grammar.language;
    let words = |cat: Category, cap: usize| -> Vec<String> {
        let mut out = Vec::new();
        for e in lex.entries() {
            if e.pos == cat && e.pronoun.is_none() && !e.idiom {
                if let Some(s) = e.surface(lang) {
                    out.push(s.to_string());
                    if out.len() == cap {
                        break;
                    }
                }
            }
        }
        out
    };
    let nouns = words(Category::Np, 4);
    let tverbs = words(Category::Tvp, 2);
    let iverbs = words(Category::Ivp, 2);
    let adjs = words(Category::Adj, 2);
    let advs = words(Category::Adv, 2);
    let mut out: Vec<Vec<String>> = Vec::new();
    let mut push = |toks: Vec<String>, out: &mut Vec<Vec<String>>| {
        if out.len() < limit && !out.contains(&toks) {
            out.push(toks);
        }
    };
    for s in &nouns {
        for v in &tverbs {
            for o in &nouns {
                if s == o {
                    continue;
                }
                let toks = match lang {
                    Lang::En => vec![s.clone(), v.clone(), o.clone()],
                    Lang::Bn => vec![s.clone(), o.clone(), v.clone()],
                };
                push(toks, &mut out);
            }
        }
    }
    for s in &nouns {
        for v in &iverbs {
            push(vec![s.clone(), v.clone()], &mut out);
            for a in &advs {
                match lang {
                    Lang::En => {
                        push(vec![s.clone(), a.clone(), v.clone()], &mut out);
                        push(vec![s.clone(), v.clone(), a.clone()], &mut out);
                    }
                    Lang::Bn => push(vec![s.clone(), a.clone(), v.clone()], &mut out),
                }
            }
        }
    }
    for s in &nouns {
        for adj in &adjs {
            let toks = match lang {
                Lang::En => vec![s.clone(), "is".to_string(), adj.clone()],
                Lang::Bn => vec![s.clone(), adj.clone()],
            };
            push(toks, &mut out);
        }
    }
    // Case-marked objects exercise stripping on the Bengali side.
    if lang == Lang::Bn {
        let marked: Vec<String> = lex
            .entries()
            .iter()
            .filter(|e| e.pos == Category::Np)
            .filter_map(|e| e.forms.accusative.clone())
            .take(3)
            .collect();
        for s in &nouns {
            for v in &tverbs {
                for o in &marked {
                    push(vec![s.clone(), o.clone(), v.clone()], &mut out);
                }
            }
        }
    }
    out.truncate(limit);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn load_rejects_empty_grammar() {
        assert_eq!(
            load_grammar(Lang::En, "# nothing here\n"),
            Err(GrammarError::UnreachableNonTerminal(Category::S))
        );
    }

    #[test]
    fn load_rejects_unknown_category() {
        assert!(matches!(
            load_grammar(Lang::En, "XP -> NP\nS -> NP IVP\n"),
            Err(GrammarError::UnknownCategory { name, .. }) if name == "XP"
        ));
    }

    #[test]
    fn load_keeps_transitive_rules() {
        let (en, bn, _) = fixtures();
        assert!(en.rules().iter().any(|r| {
            r.lhs == Category::S
                && r.rhs
                    == vec![
                        Symbol::NonTerminal(Category::Np),
                        Symbol::NonTerminal(Category::Tvp),
                        Symbol::NonTerminal(Category::Np),
                    ]
        }));
        assert!(bn.rules().iter().any(|r| {
            r.lhs == Category::S
                && r.rhs
                    == vec![
                        Symbol::NonTerminal(Category::Np),
                        Symbol::NonTerminal(Category::Np),
                        Symbol::NonTerminal(Category::Tvp),
                    ]
        }));
    }

    #[test]
    fn parse_english_transitive() {
        let (en, _, lex) = fixtures();
        let tree = parse(&en, &toks("Millie eats rice"), &lex).unwrap();
        assert_eq!(linearize(&tree), toks("Millie eats rice"));
        let cats: Vec<Option<Category>> =
            tree.children.iter().map(|c| c.category()).collect();
        assert_eq!(
            cats,
            vec![Some(Category::Np), Some(Category::Tvp), Some(Category::Np)]
        );
        assert!(tree.validate(&en));
    }

    #[test]
    fn parse_bengali_transitive_is_verb_final() {
        let (_, bn, lex) = fixtures();
        let tree = parse(&bn, &toks("Millie bhāta khāẏa"), &lex).unwrap();
        let cats: Vec<Option<Category>> =
            tree.children.iter().map(|c| c.category()).collect();
        assert_eq!(
            cats,
            vec![Some(Category::Np), Some(Category::Np), Some(Category::Tvp)]
        );
    }

    #[test]
    fn parse_unknown_token() {
        let (en, _, lex) = fixtures();
        assert_eq!(
            parse(&en, &toks("Millie flurgs"), &lex),
            Err(ParseError::UnknownToken("flurgs".into()))
        );
    }

    #[test]
    fn parse_copula_literal() {
        let (en, _, lex) = fixtures();
        let tree = parse(&en, &toks("Millie is pretty"), &lex).unwrap();
        assert_eq!(linearize(&tree), toks("Millie is pretty"));
        assert!(matches!(
            &tree.children[1].node,
            Node::Leaf(l) if l.cat.is_none() && l.surface == "is"
        ));
    }

    #[test]
    fn parse_empty_input_is_no_parse() {
        let (en, _, lex) = fixtures();
        assert_eq!(parse(&en, &[], &lex), Err(ParseError::NoParse));
    }

    #[test]
    fn linearize_round_trips_case_marked_tokens() {
        let (_, bn, lex) = fixtures();
        let input = toks("Millie Billiekē bhālōbāsē");
        let tree = parse(&bn, &input, &lex).unwrap();
        assert_eq!(linearize(&tree), input);
    }

    #[test]
    fn structural_invariant_verb_position() {
        let (en, bn, lex) = fixtures();
        for s in enumerate_sentences(&en, &lex, 40) {
            let tree = parse(&en, &s, &lex).unwrap();
            if let Node::Rule { rule, .. } = &tree.node {
                if let Some(ClauseShape::Transitive { verb, .. }) =
                    clause_shape(en.rule(rule).unwrap())
                {
                    assert_eq!(verb, 1, "English transitive verb is second");
                }
            }
        }
        for s in enumerate_sentences(&bn, &lex, 40) {
            let tree = parse(&bn, &s, &lex).unwrap();
            if let Node::Rule { rule, .. } = &tree.node {
                if let Some(ClauseShape::Transitive { verb, .. }) =
                    clause_shape(bn.rule(rule).unwrap())
                {
                    assert_eq!(verb, 2, "Bengali transitive verb is last");
                }
            }
        }
    }

    #[test]
    fn merge_relative_subject_replaces_second_occurrence() {
        let (_, bn, lex) = fixtures();
        let t1 = parse(&bn, &toks("Millie Billiekē bhālōbāsē"), &lex).unwrap();
        let t2 = parse(&bn, &toks("Billie sudarśana"), &lex).unwrap();
        let merged = merge_pronominal(&t1, &t2, LinkKind::RelativeSubject, &bn, &lex).unwrap();
        assert_eq!(
            linearize(&merged),
            toks("Millie Billiekē bhālōbāsē yē sudarśana")
        );
        let leaves = merged.leaves();
        let (path, ye) = leaves
            .iter()
            .find(|(_, l)| l.surface == "yē")
            .expect("relative pronoun present");
        let ann = ye.link.as_ref().unwrap();
        assert_eq!(ann.kind, LinkKind::RelativeSubject);
        let antecedent = leaf_at(&merged, &ann.antecedent).unwrap();
        assert_eq!(antecedent.base, "Billie");
        assert!(path.starts_with(&[1]));
    }

    #[test]
    fn merge_resumptive_inserts_se() {
        let (_, bn, lex) = fixtures();
        let t1 = parse(&bn, &toks("Millie Billiekē bhālōbāsē"), &lex).unwrap();
        let t2 = parse(&bn, &toks("Millie Billiekē chocolate dēẏa"), &lex).unwrap();
        let merged =
            merge_pronominal(&t1, &t2, LinkKind::RelativeResumptive, &bn, &lex).unwrap();
        assert_eq!(
            linearize(&merged),
            toks("Millie yē Billiekē bhālōbāsē sē tākē chocolate dēẏa")
        );
        // Exactly one leaf more than the two clauses together.
        let before = linearize(&t1).len() + linearize(&t2).len();
        assert_eq!(linearize(&merged).len(), before + 1);
    }

    #[test]
    fn merge_reflexive_rewrites_object() {
        let (_, bn, lex) = fixtures();
        let t1 = parse(&bn, &toks("Millie Milliekē dēkhē"), &lex).unwrap();
        let merged = merge_pronominal(&t1, &t1, LinkKind::Reflexive, &bn, &lex).unwrap();
        assert_eq!(linearize(&merged), toks("Millie nijēkē dēkhē"));
    }

    #[test]
    fn merge_rejects_unrelated_nouns() {
        let (_, bn, lex) = fixtures();
        let t1 = parse(&bn, &toks("Millie Billiekē bhālōbāsē"), &lex).unwrap();
        let t2 = parse(&bn, &toks("Lily sudarśana"), &lex).unwrap();
        assert_eq!(
            merge_pronominal(&t1, &t2, LinkKind::RelativeSubject, &bn, &lex),
            Err(MergeError::NoSharedNoun)
        );
    }

    #[test]
    fn merge_preserves_noun_occurrences() {
        let (en, _, lex) = fixtures();
        let t1 = parse(&en, &toks("Millie loves Lily"), &lex).unwrap();
        let t2 = parse(&en, &toks("Lily sees Millie"), &lex).unwrap();
        let merged = merge_pronominal(&t1, &t2, LinkKind::RelativeSubject, &en, &lex).unwrap();
        let noun_count = |t: &ParseTree| {
            t.leaves()
                .iter()
                .filter(|(_, l)| l.cat == Some(Category::Np))
                .count()
        };
        assert_eq!(noun_count(&merged), noun_count(&t1) + noun_count(&t2));
        assert_eq!(linearize(&merged), toks("Millie loves Lily who sees Millie"));
    }

    #[test]
    fn merge_resumptive_is_bengali_only() {
        let (en, _, lex) = fixtures();
        let t1 = parse(&en, &toks("Millie loves Billie"), &lex).unwrap();
        let t2 = parse(&en, &toks("Millie sees Lily"), &lex).unwrap();
        assert_eq!(
            merge_pronominal(&t1, &t2, LinkKind::RelativeResumptive, &en, &lex),
            Err(MergeError::UnsupportedLink(LinkKind::RelativeResumptive))
        );
    }

    #[test]
    fn enumeration_round_trips() {
        let (en, bn, lex) = fixtures();
        for g in [&en, &bn] {
            let sentences = enumerate_sentences(g, &lex, 40);
            assert!(sentences.len() >= 30, "{} sentences", sentences.len());
            for s in sentences {
                let tree = parse(g, &s, &lex).unwrap_or_else(|e| {
                    panic!("{} should parse: {e}", s.join(" "));
                });
                assert_eq!(linearize(&tree), s);
                assert!(tree.validate(g));
            }
        }
    }
}
