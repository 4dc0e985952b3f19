//! PNML subset: one page, unit arc weights, `<initialMarking>` on places and
//! the final marking in a `<finalmarkings>` block as written by ProM and
//! pm4py. A transition is τ when its name text is empty (or `tau`) or when it
//! carries `<toolspecific activity="$invisible$"/>`.

use std::fmt::Write as _;
use std::path::Path;

use roxmltree::{Document, Node};

use super::{AcceptingPetriNet, Arc, LabeledPetriNet, NetError};
use crate::eventlog::{Symbol, TAU};

const INVISIBLE: &str = "$invisible$";

fn format_err(msg: impl Into<String>) -> NetError {
    NetError::Format(msg.into())
}

pub fn load_pnml(path: &Path) -> Result<AcceptingPetriNet, NetError> {
    let text = std::fs::read_to_string(path)?;
    parse_pnml(&text)
}

pub fn save_pnml(apn: &AcceptingPetriNet, path: &Path) -> Result<(), NetError> {
    std::fs::write(path, write_pnml(apn))?;
    Ok(())
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

/// Text of `<tag><text>..</text></tag>` below `node`.
fn nested_text<'a>(node: Node<'a, '_>, tag: &str) -> Option<&'a str> {
    let inner = child(node, tag)?;
    Some(child(inner, "text").and_then(|t| t.text()).unwrap_or("").trim())
}

fn parse_tokens(text: &str, what: &str) -> Result<u32, NetError> {
    text.parse::<u32>()
        .map_err(|_| format_err(format!("invalid token count `{text}` in {what}")))
}

pub fn parse_pnml(text: &str) -> Result<AcceptingPetriNet, NetError> {
    let doc = Document::parse(text).map_err(|e| format_err(format!("XML: {e}")))?;
    let root = doc.root_element();
    let net_node = if root.has_tag_name("net") {
        root
    } else {
        child(root, "net").ok_or_else(|| format_err("no <net> element"))?
    };
    let pages: Vec<Node> = net_node.children().filter(|c| c.has_tag_name("page")).collect();
    let container = match pages.len() {
        0 => net_node,
        1 => pages[0],
        n => return Err(format_err(format!("{n} pages found; only single-page nets are supported"))),
    };

    let mut net = LabeledPetriNet::new();
    let mut initial_tokens: Vec<(String, u32)> = Vec::new();
    let mut arcs: Vec<(String, String)> = Vec::new();

    for node in container.children().filter(Node::is_element) {
        match node.tag_name().name() {
            "place" => {
                let id = node
                    .attribute("id")
                    .ok_or_else(|| format_err("place without id"))?;
                net.add_place(id)?;
                if let Some(tokens) = nested_text(node, "initialMarking") {
                    let n = parse_tokens(tokens, "initialMarking")?;
                    if n > 0 {
                        initial_tokens.push((id.to_string(), n));
                    }
                }
            }
            "transition" => {
                let id = node
                    .attribute("id")
                    .ok_or_else(|| format_err("transition without id"))?;
                let invisible = node
                    .children()
                    .filter(|c| c.has_tag_name("toolspecific"))
                    .any(|c| c.attribute("activity") == Some(INVISIBLE));
                let label = match (nested_text(node, "name"), invisible) {
                    (_, true) => None,
                    (Some(""), false) | (Some(TAU), false) => None,
                    (Some(name), false) => Some(Symbol::new(name)),
                    (None, false) => {
                        return Err(format_err(format!(
                            "transition `{id}` has neither a name nor an invisible marker"
                        )))
                    }
                };
                net.add_transition(id, label)?;
            }
            "arc" => {
                let source = node.attribute("source").ok_or_else(|| format_err("arc without source"))?;
                let target = node.attribute("target").ok_or_else(|| format_err("arc without target"))?;
                if let Some(w) = nested_text(node, "inscription") {
                    if parse_tokens(w, "arc inscription")? != 1 {
                        return Err(format_err(format!("arc {source} -> {target}: weights other than 1 are not supported")));
                    }
                }
                arcs.push((source.to_string(), target.to_string()));
            }
            _ => {}
        }
    }
    // arcs may precede their endpoints in document order
    for (s, t) in &arcs {
        net.add_arc(s, t)?;
    }

    if initial_tokens.is_empty() {
        return Err(format_err("missing initial marking"));
    }
    let initial_refs: Vec<(&str, u32)> = initial_tokens.iter().map(|(p, n)| (p.as_str(), *n)).collect();
    let initial = net.marking(&initial_refs)?;

    let finals = child(net_node, "finalmarkings")
        .and_then(|f| child(f, "marking"))
        .ok_or_else(|| format_err("missing final marking (<finalmarkings> block)"))?;
    let mut final_tokens = Vec::new();
    for place in finals.children().filter(|c| c.has_tag_name("place")) {
        let idref = place
            .attribute("idref")
            .ok_or_else(|| format_err("final marking place without idref"))?;
        let n = parse_tokens(
            child(place, "text").and_then(|t| t.text()).unwrap_or("").trim(),
            "final marking",
        )?;
        if n > 0 {
            final_tokens.push((idref.to_string(), n));
        }
    }
    let final_refs: Vec<(&str, u32)> = final_tokens.iter().map(|(p, n)| (p.as_str(), *n)).collect();
    let final_marking = net.marking(&final_refs)?;
    AcceptingPetriNet::new(net, initial, final_marking)
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
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

pub fn write_pnml(apn: &AcceptingPetriNet) -> String {
    let net = &apn.net;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<pnml>\n");
    out.push_str("  <net id=\"net1\" type=\"http://www.pnml.org/version-2009/grammar/pnmlcoremodel\">\n");
    out.push_str("    <page id=\"n0\">\n");
    for (p, id) in net.places().iter().enumerate() {
        let id = escape(id);
        let _ = write!(out, "      <place id=\"{id}\">\n        <name><text>{id}</text></name>\n");
        let tokens = apn.initial.tokens(p);
        if tokens > 0 {
            let _ = writeln!(out, "        <initialMarking><text>{tokens}</text></initialMarking>");
        }
        out.push_str("      </place>\n");
    }
    for t in net.transitions() {
        let id = escape(&t.id);
        let _ = writeln!(out, "      <transition id=\"{id}\">");
        match &t.label {
            Some(l) => {
                let _ = writeln!(out, "        <name><text>{}</text></name>", escape(l.name()));
            }
            None => {
                out.push_str("        <name><text></text></name>\n");
                let _ = writeln!(
                    out,
                    "        <toolspecific tool=\"ProM\" version=\"6.4\" activity=\"{INVISIBLE}\" localNodeID=\"{id}\"/>"
                );
            }
        }
        out.push_str("      </transition>\n");
    }
    for (i, arc) in net.arcs().iter().enumerate() {
        let (s, t) = match *arc {
            Arc::PlaceToTransition(p, t) => (&net.places()[p], &net.transitions()[t].id),
            Arc::TransitionToPlace(t, p) => (&net.transitions()[t].id, &net.places()[p]),
        };
        let _ = writeln!(out, "      <arc id=\"arc{}\" source=\"{}\" target=\"{}\"/>", i + 1, escape(s), escape(t));
    }
    out.push_str("    </page>\n    <finalmarkings>\n      <marking>\n");
    for (p, id) in net.places().iter().enumerate() {
        let tokens = apn.final_marking.tokens(p);
        if tokens > 0 {
            let _ = writeln!(out, "        <place idref=\"{}\"><text>{tokens}</text></place>", escape(id));
        }
    }
    out.push_str("      </marking>\n    </finalmarkings>\n  </net>\n</pnml>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::petrinet::running_example;

    #[test]
    fn round_trip_running_example() {
        let apn = running_example();
        let text = write_pnml(&apn);
        assert_eq!(parse_pnml(&text).unwrap(), apn);
    }

    fn wrap(page: &str, finals: &str) -> String {
        format!("<pnml><net id=\"n\"><page id=\"pg\">{page}</page>{finals}</net></pnml>")
    }

    const FINAL_Q: &str = "<finalmarkings><marking><place idref=\"q\"><text>1</text></place></marking></finalmarkings>";

    #[test]
    fn empty_name_is_tau() {
        let page = r#"<place id="p"><initialMarking><text>1</text></initialMarking></place><place id="q"/>
            <transition id="t"><name><text></text></name></transition>
            <arc id="a" source="p" target="t"/><arc id="b" source="t" target="q"/>"#;
        let apn = parse_pnml(&wrap(page, FINAL_Q)).unwrap();
        assert!(apn.net.transitions()[0].is_tau());
        assert!(apn.accepts(&[], 4).unwrap());
    }

    #[test]
    fn missing_markings_and_names_are_errors() {
        let no_init = r#"<place id="p"/><place id="q"/>"#;
        assert!(matches!(parse_pnml(&wrap(no_init, FINAL_Q)), Err(NetError::Format(m)) if m.contains("initial")));

        let no_final = r#"<place id="p"><initialMarking><text>1</text></initialMarking></place><place id="end"/>"#;
        assert!(matches!(parse_pnml(&wrap(no_final, "")), Err(NetError::Format(m)) if m.contains("final")));

        let nameless = r#"<place id="p"><initialMarking><text>1</text></initialMarking></place><place id="q"/><transition id="t"/>"#;
        assert!(matches!(parse_pnml(&wrap(nameless, FINAL_Q)), Err(NetError::Format(m)) if m.contains("neither")));

        let weighted = r#"<place id="p"><initialMarking><text>1</text></initialMarking></place><place id="q"/>
            <transition id="t"><name><text>x</text></name></transition>
            <arc id="a" source="p" target="t"><inscription><text>2</text></inscription></arc>"#;
        assert!(matches!(parse_pnml(&wrap(weighted, FINAL_Q)), Err(NetError::Format(m)) if m.contains("weights")));
    }

    #[test]
    fn escaping_survives_round_trip() {
        let mut net = LabeledPetriNet::new();
        net.add_place("p<1>").unwrap();
        net.add_transition("t&1", Some(Symbol::new("examine \"thoroughly\""))).unwrap();
        net.add_arc("p<1>", "t&1").unwrap();
        let m = net.marking_of(&["p<1>"]).unwrap();
        let apn = AcceptingPetriNet::new(net, m.clone(), m).unwrap();
        assert_eq!(parse_pnml(&write_pnml(&apn)).unwrap(), apn);
    }
}
