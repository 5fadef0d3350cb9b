//! Colored PNML input (the symmetric-net subset used by the Model Checking
//! Contest).
//!
//! Sorts map to integer ranges: `dot` is `[1]`, an enumeration of `n`
//! constants is `[1,n]` with constants numbered from 1, `finiteintrange`
//! keeps its bounds, and products flatten into tuples. `successor` and
//! `predecessor` become cyclic shifts by ±1. Inhibitor arcs are arcs with
//! `type="inhibitor"`; their weight comes from a `weight` attribute or a
//! numeric inscription and defaults to 1.

use std::collections::HashMap;

use roxmltree::{Document, Node};

use crate::color::{ColorSet, Interval, IntervalSet};
use crate::error::{Error, Result};
use crate::expr::{eval_arc, ArcExpr, Binding, CmpOp, GuardExpr, SimpleExpr, VarId};
use crate::multiset::Multiset;
use crate::net::{ColoredNet, NetBuilder};

/// Domains larger than this are refused.
const MAX_DOMAIN: u128 = 1 << 32;

/// An enumeration constant and the integer standing for it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumConstant {
    pub id: String,
    pub name: String,
    pub sort: String,
    pub value: u32,
}

#[derive(Clone, Debug)]
pub struct PnmlModel {
    pub net: ColoredNet,
    /// Enumeration constants in declaration order.
    pub constants: Vec<EnumConstant>,
}

pub fn parse_colored_pnml(text: &str) -> Result<ColoredNet> {
    parse_colored_pnml_model(text).map(|m| m.net)
}

pub fn parse_colored_pnml_model(text: &str) -> Result<PnmlModel> {
    let doc = Document::parse(text)?;
    Parser::new(&doc).run()
}

/// True when the document declares a P/T net rather than a colored one.
pub fn is_pt_document(text: &str) -> Result<bool> {
    let doc = Document::parse(text)?;
    Ok(doc
        .descendants()
        .find(|n| n.has_tag_name("net"))
        .and_then(|n| n.attribute("type"))
        .is_some_and(|t| t.contains("ptnet")))
}

#[derive(Clone, Debug)]
enum Sort {
    /// One coordinate per component.
    Ranges(Vec<Interval>),
}

impl Sort {
    fn ranges(&self) -> &[Interval] {
        let Sort::Ranges(r) = self;
        r
    }

    fn domain(&self) -> ColorSet {
        let coords: Vec<IntervalSet> = self.ranges().iter().map(|iv| IntervalSet::from_interval(*iv)).collect();
        ColorSet::product(&coords)
    }
}

struct Parser<'a, 'input> {
    doc: &'a Document<'input>,
    sorts: HashMap<String, Sort>,
    constants: HashMap<String, (String, u32)>,
    constant_list: Vec<EnumConstant>,
    variables: HashMap<String, (VarId, Interval)>,
    builder: NetBuilder,
}

fn elements<'a, 'i>(n: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    n.children().filter(Node::is_element)
}

impl<'a, 'input> Parser<'a, 'input> {
    fn new(doc: &'a Document<'input>) -> Self {
        Parser {
            doc,
            sorts: HashMap::new(),
            constants: HashMap::new(),
            constant_list: Vec::new(),
            variables: HashMap::new(),
            builder: NetBuilder::new(),
        }
    }

    fn err(&self, n: Node, message: impl Into<String>) -> Error {
        let pos = self.doc.text_pos_at(n.range().start);
        Error::Pnml {
            element: n.tag_name().name().to_string(),
            location: format!("{}:{}", pos.row, pos.col),
            message: message.into(),
        }
    }

    fn attr<'n>(&self, n: Node<'n, 'input>, name: &str) -> Result<&'n str> {
        n.attribute(name)
            .ok_or_else(|| self.err(n, format!("missing attribute `{name}`")))
    }

    fn only_child(&self, n: Node<'a, 'input>) -> Result<Node<'a, 'input>> {
        let mut it = elements(n);
        match (it.next(), it.next()) {
            (Some(c), None) => Ok(c),
            _ => Err(self.err(n, "expected exactly one child element")),
        }
    }

    /// The element inside `<structure>` under `n`'s child named `tag`.
    fn structure(&self, n: Node<'a, 'input>, tag: &str) -> Result<Option<Node<'a, 'input>>> {
        let Some(c) = elements(n).find(|c| c.has_tag_name(tag)) else {
            return Ok(None);
        };
        let s = elements(c)
            .find(|c| c.has_tag_name("structure"))
            .ok_or_else(|| self.err(c, "missing <structure>"))?;
        self.only_child(s).map(Some)
    }

    /// Subterms of an operator, skipping the `<subterm>` wrappers.
    fn subterms(&self, n: Node<'a, 'input>) -> Result<Vec<Node<'a, 'input>>> {
        elements(n)
            .filter(|c| c.has_tag_name("subterm"))
            .map(|c| self.only_child(c))
            .collect()
    }

    fn run(mut self) -> Result<PnmlModel> {
        let root = self.doc.root_element();
        let net = root
            .descendants()
            .find(|n| n.has_tag_name("net"))
            .ok_or_else(|| self.err(root, "no <net> element"))?;
        for d in net.descendants().filter(|n| n.has_tag_name("declarations")) {
            for decl in elements(d) {
                self.declaration(decl)?;
            }
        }
        let mut place_ids = HashMap::new();
        for p in net.descendants().filter(|n| n.has_tag_name("place")) {
            let id = self.attr(p, "id")?;
            let sort = match self.structure(p, "type")? {
                Some(s) => self.sort_ref(s)?,
                None => return Err(self.err(p, "colored place without a <type>")),
            };
            let domain = sort.domain();
            let initial = match self.structure(p, "hlinitialMarking")? {
                Some(term) => {
                    let e = self.arc_term(term)?;
                    eval_arc(&e, &Binding::default(), self.builder.variables())
                        .map_err(|e| self.err(term, e.to_string()))?
                }
                None => Multiset::new(),
            };
            let idx = self.builder.place(id, domain, initial);
            place_ids.insert(id.to_string(), idx);
        }
        let mut transition_ids = HashMap::new();
        for t in net.descendants().filter(|n| n.has_tag_name("transition")) {
            let id = self.attr(t, "id")?;
            let guard = match self.structure(t, "condition")? {
                Some(g) => self.guard(g)?,
                None => GuardExpr::True,
            };
            transition_ids.insert(id.to_string(), self.builder.transition(id, guard));
        }
        for a in net.descendants().filter(|n| n.has_tag_name("arc")) {
            let (src, tgt) = (self.attr(a, "source")?, self.attr(a, "target")?);
            let unknown = |s: &str| self.err(a, format!("unknown node `{s}`"));
            if a.attribute("type") == Some("inhibitor") {
                let p = *place_ids.get(src).ok_or_else(|| unknown(src))?;
                let t = *transition_ids.get(tgt).ok_or_else(|| unknown(tgt))?;
                let w = self.inhibitor_weight(a)?;
                self.builder.inhibitor(p, t, w);
                continue;
            }
            let term = self
                .structure(a, "hlinscription")?
                .ok_or_else(|| self.err(a, "arc without <hlinscription>"))?;
            let e = self.arc_term(term)?;
            match (
                place_ids.get(src),
                transition_ids.get(tgt),
                transition_ids.get(src),
                place_ids.get(tgt),
            ) {
                (Some(&p), Some(&t), _, _) => {
                    self.builder.input(p, t, e);
                }
                (_, _, Some(&t), Some(&p)) => {
                    self.builder.output(t, p, e);
                }
                _ => return Err(self.err(a, format!("arc `{src}` -> `{tgt}` must join a place and a transition"))),
            }
        }
        let net = self.builder.build()?;
        Ok(PnmlModel {
            net,
            constants: self.constant_list,
        })
    }

    fn inhibitor_weight(&self, a: Node) -> Result<u64> {
        if let Some(w) = a.attribute("weight") {
            return w.trim().parse().map_err(|_| self.err(a, format!("bad weight `{w}`")));
        }
        let text = elements(a)
            .find(|c| c.has_tag_name("inscription"))
            .and_then(|i| elements(i).find(|c| c.has_tag_name("text")))
            .and_then(|t| t.text());
        match text {
            Some(w) => w.trim().parse().map_err(|_| self.err(a, format!("bad weight `{w}`"))),
            None => Ok(1),
        }
        .and_then(|w: u64| {
            if w == 0 {
                Err(self.err(a, "inhibitor weight must be positive"))
            } else {
                Ok(w)
            }
        })
    }

    fn declaration(&mut self, d: Node<'a, 'input>) -> Result<()> {
        match d.tag_name().name() {
            "namedsort" => {
                let id = self.attr(d, "id")?;
                let def = self.only_child(d)?;
                let sort = self.sort_def(id, def)?;
                let size = sort
                    .ranges()
                    .iter()
                    .fold(1u128, |acc, iv| acc.saturating_mul(iv.len() as u128));
                if size > MAX_DOMAIN {
                    return Err(self.err(d, format!("sort `{id}` has {size} colors, more than 2^32")));
                }
                self.builder.sort(id, sort.domain());
                self.sorts.insert(id.to_string(), sort);
                Ok(())
            }
            "variabledecl" => {
                let id = self.attr(d, "id")?;
                let sort = self.sort_ref(self.only_child(d)?)?;
                let [range] = sort.ranges() else {
                    return Err(self.err(d, "variables over product sorts are not supported"));
                };
                let v = self.builder.variable(id, *range)?;
                self.variables.insert(id.to_string(), (v, *range));
                Ok(())
            }
            other => Err(self.err(d, format!("unsupported declaration <{other}>"))),
        }
    }

    fn sort_def(&mut self, id: &str, def: Node<'a, 'input>) -> Result<Sort> {
        match def.tag_name().name() {
            "dot" => Ok(Sort::Ranges(vec![Interval::point(1)])),
            "cyclicenumeration" | "finiteenumeration" => {
                let consts: Vec<Node> = elements(def).filter(|c| c.has_tag_name("feconstant")).collect();
                if consts.is_empty() {
                    return Err(self.err(def, "empty enumeration"));
                }
                for (i, c) in consts.iter().enumerate() {
                    let cid = self.attr(*c, "id")?;
                    let value = i as u32 + 1;
                    self.constants.insert(cid.to_string(), (id.to_string(), value));
                    self.constant_list.push(EnumConstant {
                        id: cid.to_string(),
                        name: c.attribute("name").unwrap_or(cid).to_string(),
                        sort: id.to_string(),
                        value,
                    });
                }
                Ok(Sort::Ranges(vec![Interval::new(1, consts.len() as u32)]))
            }
            "finiteintrange" => Ok(Sort::Ranges(vec![self.int_range(def)?])),
            "productsort" => {
                let mut ranges = Vec::new();
                for c in elements(def) {
                    ranges.extend_from_slice(self.sort_ref(c)?.ranges());
                }
                if ranges.is_empty() {
                    return Err(self.err(def, "empty product"));
                }
                Ok(Sort::Ranges(ranges))
            }
            "usersort" => self.sort_ref(def),
            other => Err(self.err(def, format!("unsupported sort <{other}>"))),
        }
    }

    fn int_range(&self, n: Node) -> Result<Interval> {
        let bound = |name: &str| -> Result<u32> {
            let v = self.attr(n, name)?;
            v.parse()
                .map_err(|_| self.err(n, format!("`{name}` must be a nonnegative integer, got `{v}`")))
        };
        let (lo, hi) = (bound("start")?, bound("end")?);
        if lo > hi {
            return Err(self.err(n, format!("empty range [{lo},{hi}]")));
        }
        Ok(Interval::new(lo, hi))
    }

    fn sort_ref(&self, n: Node) -> Result<Sort> {
        match n.tag_name().name() {
            "usersort" => {
                let d = self.attr(n, "declaration")?;
                self.sorts
                    .get(d)
                    .cloned()
                    .ok_or_else(|| self.err(n, format!("unknown sort `{d}`")))
            }
            "dot" => Ok(Sort::Ranges(vec![Interval::point(1)])),
            "finiteintrange" => Ok(Sort::Ranges(vec![self.int_range(n)?])),
            other => Err(self.err(n, format!("unsupported sort reference <{other}>"))),
        }
    }

    fn number(&self, n: Node) -> Result<u64> {
        if !n.has_tag_name("numberconstant") {
            return Err(self.err(n, "expected <numberconstant>"));
        }
        let v = self.attr(n, "value")?;
        v.parse().map_err(|_| self.err(n, format!("bad number `{v}`")))
    }

    fn arc_term(&self, n: Node<'a, 'input>) -> Result<ArcExpr> {
        match n.tag_name().name() {
            "numberof" => {
                let subs = self.subterms(n)?;
                let [count, color] = subs.as_slice() else {
                    return Err(self.err(n, "<numberof> needs a count and a color term"));
                };
                let k = self.number(*count)?;
                if k == 0 {
                    return Err(self.err(n, "zero multiplicity"));
                }
                if color.has_tag_name("all") {
                    return Ok(ArcExpr::Scale(k, Box::new(self.arc_term(*color)?)));
                }
                Ok(ArcExpr::NumberOf(k, self.tuple(*color)?))
            }
            "add" => {
                let parts = self
                    .subterms(n)?
                    .into_iter()
                    .map(|c| self.arc_term(c))
                    .collect::<Result<Vec<_>>>()?;
                ArcExpr::sum(parts).ok_or_else(|| self.err(n, "empty <add>"))
            }
            "subtract" => {
                let subs = self.subterms(n)?;
                let mut it = subs.into_iter();
                let first = it.next().ok_or_else(|| self.err(n, "empty <subtract>"))?;
                let mut acc = self.arc_term(first)?;
                for c in it {
                    acc = ArcExpr::Sub(Box::new(acc), Box::new(self.arc_term(c)?));
                }
                Ok(acc)
            }
            "scalarproduct" => {
                let subs = self.subterms(n)?;
                let [k, e] = subs.as_slice() else {
                    return Err(self.err(n, "<scalarproduct> needs a number and a term"));
                };
                Ok(ArcExpr::Scale(self.number(*k)?, Box::new(self.arc_term(*e)?)))
            }
            "all" => Ok(ArcExpr::All(self.sort_ref(self.only_child(n)?)?.domain())),
            // a bare color term stands for one token of it
            _ => Ok(ArcExpr::NumberOf(1, self.tuple(n)?)),
        }
    }

    fn tuple(&self, n: Node<'a, 'input>) -> Result<Vec<SimpleExpr>> {
        if n.has_tag_name("tuple") {
            let mut out = Vec::new();
            for c in self.subterms(n)? {
                out.extend(self.tuple(c)?);
            }
            return Ok(out);
        }
        Ok(vec![self.simple(n)?])
    }

    fn simple(&self, n: Node<'a, 'input>) -> Result<SimpleExpr> {
        match n.tag_name().name() {
            "variable" => {
                let r = self.attr(n, "refvariable")?;
                let (v, _) = self
                    .variables
                    .get(r)
                    .ok_or_else(|| self.err(n, format!("unknown variable `{r}`")))?;
                Ok(SimpleExpr::Var(*v))
            }
            "useroperator" => {
                let d = self.attr(n, "declaration")?;
                let (_, value) = self
                    .constants
                    .get(d)
                    .ok_or_else(|| self.err(n, format!("unknown constant `{d}`")))?;
                Ok(SimpleExpr::Const(*value))
            }
            "dotconstant" => Ok(SimpleExpr::Const(1)),
            "finiteintrangeconstant" => {
                let v = self.attr(n, "value")?;
                v.parse()
                    .map(SimpleExpr::Const)
                    .map_err(|_| self.err(n, format!("bad constant `{v}`")))
            }
            "successor" | "predecessor" => {
                let delta: i64 = if n.has_tag_name("successor") { 1 } else { -1 };
                let inner = self.subterms(n)?;
                let [inner] = inner.as_slice() else {
                    return Err(self.err(n, "expected one subterm"));
                };
                match self.simple(*inner)? {
                    SimpleExpr::Var(v) => Ok(shifted(v, delta)),
                    SimpleExpr::VarShift(v, d) => Ok(shifted(v, d + delta)),
                    SimpleExpr::Const(c) => {
                        let range = self.constant_range(*inner)?;
                        Ok(SimpleExpr::Const(range.rotate(c, delta)))
                    }
                }
            }
            other => Err(self.err(n, format!("unsupported color term <{other}>"))),
        }
    }

    /// Range of the sort a constant term belongs to.
    fn constant_range(&self, n: Node<'a, 'input>) -> Result<Interval> {
        match n.tag_name().name() {
            "useroperator" => {
                let (sort, _) = &self.constants[self.attr(n, "declaration")?];
                Ok(self.sorts[sort].ranges()[0])
            }
            "dotconstant" => Ok(Interval::point(1)),
            "finiteintrangeconstant" => self.int_range(self.only_child(n)?),
            "successor" | "predecessor" => self.constant_range(self.subterms(n)?[0]),
            other => Err(self.err(n, format!("cannot shift <{other}>"))),
        }
    }

    fn guard(&self, n: Node<'a, 'input>) -> Result<GuardExpr> {
        let bin = |f: fn(Box<GuardExpr>, Box<GuardExpr>) -> GuardExpr| -> Result<GuardExpr> {
            let parts = self
                .subterms(n)?
                .into_iter()
                .map(|c| self.guard(c))
                .collect::<Result<Vec<_>>>()?;
            parts
                .into_iter()
                .reduce(|a, b| f(Box::new(a), Box::new(b)))
                .ok_or_else(|| self.err(n, "no operands"))
        };
        let cmp = |op: CmpOp| -> Result<GuardExpr> {
            let subs = self.subterms(n)?;
            let [l, r] = subs.as_slice() else {
                return Err(self.err(n, "comparison needs two operands"));
            };
            let (lt, rt) = (self.tuple(*l), self.tuple(*r));
            match (lt, rt) {
                (Ok(a), Ok(b)) if a.len() == 1 && b.len() == 1 => Ok(GuardExpr::Cmp(op, a[0], b[0])),
                _ if matches!(op, CmpOp::Eq | CmpOp::Ne) => {
                    let (a, b) = (self.arc_term(*l)?, self.arc_term(*r)?);
                    Ok(if op == CmpOp::Eq {
                        GuardExpr::MsEq(a, b)
                    } else {
                        GuardExpr::MsNeq(a, b)
                    })
                }
                _ => Err(self.err(n, "ordering comparisons need single color terms")),
            }
        };
        match n.tag_name().name() {
            "and" => bin(GuardExpr::And),
            "or" => bin(GuardExpr::Or),
            "not" => {
                let subs = self.subterms(n)?;
                let [g] = subs.as_slice() else {
                    return Err(self.err(n, "<not> needs one operand"));
                };
                Ok(GuardExpr::Not(Box::new(self.guard(*g)?)))
            }
            "imply" => {
                let subs = self.subterms(n)?;
                let [a, b] = subs.as_slice() else {
                    return Err(self.err(n, "<imply> needs two operands"));
                };
                Ok(GuardExpr::Or(
                    Box::new(GuardExpr::Not(Box::new(self.guard(*a)?))),
                    Box::new(self.guard(*b)?),
                ))
            }
            "booleanconstant" => match self.attr(n, "value")? {
                "true" => Ok(GuardExpr::True),
                "false" => Ok(GuardExpr::False),
                v => Err(self.err(n, format!("bad boolean `{v}`"))),
            },
            "equality" => cmp(CmpOp::Eq),
            "inequality" => cmp(CmpOp::Ne),
            "lessthan" => cmp(CmpOp::Lt),
            "lessthanorequal" => cmp(CmpOp::Le),
            "greaterthan" => cmp(CmpOp::Gt),
            "greaterthanorequal" => cmp(CmpOp::Ge),
            other => Err(self.err(n, format!("unsupported guard <{other}>"))),
        }
    }
}

fn shifted(v: VarId, d: i64) -> SimpleExpr {
    if d == 0 {
        SimpleExpr::Var(v)
    } else {
        SimpleExpr::VarShift(v, d)
    }
}
