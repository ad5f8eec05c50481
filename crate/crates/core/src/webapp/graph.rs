use std::fmt::Write;

use super::model::WebApp;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Navigation graph in DOT: solid edges for links, labelled
/// `condition / [params]`, dashed edges for continuations.
pub fn render_dot(app: &WebApp) -> String {
    let mut out = String::from("digraph navigation {\n");
    for p in &app.pages {
        let shape = if p.name == app.scenario.entry { "doublecircle" } else { "ellipse" };
        writeln!(out, "  {} [shape={shape}];", quote(&p.name)).unwrap();
    }
    for p in &app.pages {
        for l in &p.links {
            let label = format!("{} / [{}]", l.cond.render(), l.params.join(","));
            writeln!(out, "  {} -> {} [style=solid, label={}];", quote(&p.name), quote(&l.target), quote(&label)).unwrap();
        }
        for (c, t) in &p.continuations {
            writeln!(out, "  {} -> {} [style=dashed, label={}];", quote(&p.name), quote(t), quote(&c.render())).unwrap();
        }
    }
    out.push_str("}\n");
    out
}
