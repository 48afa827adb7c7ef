//! Graphviz export. Arcs are captioned `ilabel:olabel/weight`, the weight
//! omitted when zero; final states are double circles labelled `id/weight`.

use std::fmt::Write;

use crate::fst::Wfst;
use crate::StateId;

impl Wfst {
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        out.push_str("digraph wfst {\n");
        out.push_str("  rankdir = LR;\n");
        out.push_str("  node [shape = circle];\n");
        for s in 0..self.num_states() as StateId {
            let mut attrs: Vec<String> = Vec::new();
            if let Some(w) = self.final_weight(s) {
                attrs.push("shape = doublecircle".into());
                attrs.push(format!("label = \"{}/{}\"", s, fmt_weight(w.value())));
            }
            if self.start() == Some(s) {
                attrs.push("style = bold".into());
            }
            if attrs.is_empty() {
                let _ = writeln!(out, "  {s};");
            } else {
                let _ = writeln!(out, "  {s} [{}];", attrs.join(", "));
            }
        }
        for s in 0..self.num_states() as StateId {
            for a in self.arcs(s) {
                let isym = self.isyms().symbol(a.ilabel).unwrap_or("?");
                let osym = self.osyms().symbol(a.olabel).unwrap_or("?");
                let mut caption = format!("{}:{}", escape(isym), escape(osym));
                if a.weight.value() != 0.0 {
                    caption.push('/');
                    caption.push_str(&fmt_weight(a.weight.value()));
                }
                let _ = writeln!(out, "  {s} -> {} [label = \"{caption}\"];", a.nextstate);
            }
        }
        out.push_str("}\n");
        out
    }
}

fn fmt_weight(w: f64) -> String {
    format!("{:.4}", w)
        .trim_end_matches('0')
        .trim_end_matches('.')
        .to_string()
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
