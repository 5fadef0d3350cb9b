//! P/T PNML output, and a reader for the same subset.
//!
//! Transition labels are kept in a `<toolspecific tool="cpnunfold">` block so
//! that a written net reads back unchanged.

use std::collections::HashMap;
use std::fmt::Write as _;

use roxmltree::{Document, Node};

use crate::error::{Error, Result};
use crate::ptnet::{PTNet, PtPlace, PtTransition};

const TOOL: &str = "cpnunfold";

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

pub fn write_pt_pnml(net: &PTNet, id: &str) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str("<pnml xmlns=\"http://www.pnml.org/version-2009/grammar/pnml\">\n");
    let _ = writeln!(
        s,
        "  <net id=\"{}\" type=\"http://www.pnml.org/version-2009/grammar/ptnet\">",
        escape(id)
    );
    s.push_str("    <page id=\"page0\">\n");
    for p in &net.places {
        let n = escape(&p.name);
        let _ = write!(s, "      <place id=\"{n}\"><name><text>{n}</text></name>");
        if p.initial > 0 {
            let _ = write!(s, "<initialMarking><text>{}</text></initialMarking>", p.initial);
        }
        s.push_str("</place>\n");
    }
    for t in &net.transitions {
        let n = escape(&t.name);
        let _ = writeln!(
            s,
            "      <transition id=\"{n}\"><name><text>{n}</text></name>\
             <toolspecific tool=\"{TOOL}\" version=\"1\"><label>{}</label></toolspecific></transition>",
            escape(&t.label)
        );
    }
    let mut k = 0usize;
    let mut arc = |s: &mut String, src: &str, tgt: &str, w: u64, inhibitor: bool| {
        let kind = if inhibitor { " type=\"inhibitor\"" } else { "" };
        let _ = writeln!(
            s,
            "      <arc id=\"a{k}\" source=\"{}\" target=\"{}\"{kind}><inscription><text>{w}</text></inscription></arc>",
            escape(src),
            escape(tgt)
        );
        k += 1;
    };
    for t in &net.transitions {
        for &(p, w) in &t.inputs {
            arc(&mut s, &net.places[p].name, &t.name, w, false);
        }
        for &(p, w) in &t.outputs {
            arc(&mut s, &t.name, &net.places[p].name, w, false);
        }
        for &(p, w) in &t.inhibitors {
            arc(&mut s, &net.places[p].name, &t.name, w, true);
        }
    }
    s.push_str("    </page>\n  </net>\n</pnml>\n");
    s
}

fn err(doc: &Document, n: Node, message: impl Into<String>) -> Error {
    let pos = doc.text_pos_at(n.range().start);
    Error::Pnml {
        element: n.tag_name().name().to_string(),
        location: format!("{}:{}", pos.row, pos.col),
        message: message.into(),
    }
}

fn child_text<'a>(n: Node<'a, '_>, tag: &str) -> Option<&'a str> {
    n.children()
        .find(|c| c.has_tag_name(tag))
        .and_then(|c| c.children().find(|t| t.has_tag_name("text")))
        .and_then(|t| t.text())
}

fn number(doc: &Document, n: Node, text: Option<&str>, default: u64) -> Result<u64> {
    match text {
        None => Ok(default),
        Some(t) => t
            .trim()
            .parse()
            .map_err(|_| err(doc, n, format!("`{t}` is not a number"))),
    }
}

pub fn parse_pt_pnml(text: &str) -> Result<PTNet> {
    let doc = Document::parse(text)?;
    let mut net = PTNet::default();
    let mut places = HashMap::new();
    let mut transitions = HashMap::new();
    for p in doc.descendants().filter(|n| n.has_tag_name("place")) {
        let id = p.attribute("id").ok_or_else(|| err(&doc, p, "place without id"))?;
        places.insert(id.to_string(), net.places.len());
        net.places.push(PtPlace {
            name: id.to_string(),
            initial: number(&doc, p, child_text(p, "initialMarking"), 0)?,
        });
    }
    for t in doc.descendants().filter(|n| n.has_tag_name("transition")) {
        let id = t.attribute("id").ok_or_else(|| err(&doc, t, "transition without id"))?;
        let label = t
            .children()
            .filter(|c| c.has_tag_name("toolspecific") && c.attribute("tool") == Some(TOOL))
            .flat_map(|c| c.children())
            .find(|c| c.has_tag_name("label"))
            .and_then(|c| c.text())
            .unwrap_or(id);
        transitions.insert(id.to_string(), net.transitions.len());
        net.transitions.push(PtTransition {
            name: id.to_string(),
            label: label.to_string(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            inhibitors: Vec::new(),
        });
    }
    for a in doc.descendants().filter(|n| n.has_tag_name("arc")) {
        let get = |k: &str| a.attribute(k).ok_or_else(|| err(&doc, a, format!("arc without {k}")));
        let (src, tgt) = (get("source")?, get("target")?);
        let w = number(&doc, a, child_text(a, "inscription"), 1)?;
        if w == 0 {
            return Err(err(&doc, a, "arc weight must be positive"));
        }
        let inhibitor = a.attribute("type") == Some("inhibitor");
        let (list, p) = match (
            places.get(src),
            transitions.get(tgt),
            transitions.get(src),
            places.get(tgt),
        ) {
            (Some(&p), Some(&t), _, _) => {
                let t = &mut net.transitions[t];
                (if inhibitor { &mut t.inhibitors } else { &mut t.inputs }, p)
            }
            (_, _, Some(&t), Some(&p)) if !inhibitor => (&mut net.transitions[t].outputs, p),
            _ => {
                return Err(err(
                    &doc,
                    a,
                    format!("arc `{src}` -> `{tgt}` must join a place and a transition"),
                ))
            }
        };
        match list.iter_mut().find(|(q, _)| *q == p) {
            Some((_, old)) if inhibitor => *old = (*old).min(w),
            Some((_, old)) => *old += w,
            None => list.push((p, w)),
        }
    }
    for t in &mut net.transitions {
        t.inputs.sort_unstable();
        t.outputs.sort_unstable();
        t.inhibitors.sort_unstable();
    }
    Ok(net)
}
