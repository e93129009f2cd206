use std::fmt::Write as _;

use super::{Action, ChannelDecl, Continuation, PiProgram, Prefix, ProcessDef};

/// Shortest round-trip decimal form of `x`, padded to at least
/// `min_decimals` fractional digits: `format_rate(0.5, 2) == "0.50"`.
pub fn format_rate(x: f64, min_decimals: usize) -> String {
    let s = format!("{x:?}");
    if s.contains('e') || !x.is_finite() {
        return s;
    }
    let (int, frac) = s.split_once('.').unwrap_or((&s, ""));
    let mut frac = frac.to_string();
    while frac.len() < min_decimals.max(1) {
        frac.push('0');
    }
    format!("{int}.{frac}")
}

fn decl(c: &ChannelDecl) -> String {
    let carried = if c.arity == 0 {
        String::new()
    } else {
        format!("({})", vec!["chan"; c.arity].join(","))
    };
    format!("new {}@{}:chan{}", c.name, format_rate(c.rate, c.min_decimals), carried)
}

fn tuple(names: &[String]) -> String {
    if names.is_empty() {
        String::new()
    } else {
        format!("({})", names.join(","))
    }
}

fn action(a: &Action) -> String {
    let prefix = match &a.prefix {
        Prefix::Output {
            channel,
            payload,
            weight,
        } => {
            let w = weight.map_or(String::new(), |w| format!("*{}", format_rate(w, 1)));
            format!("!{channel}{}{w}", tuple(payload))
        }
        Prefix::Input { channel, params } => format!("?{channel}{}", tuple(params)),
        Prefix::Delay { rate } => format!("delay@{}", format_rate(*rate, 1)),
    };
    let cont = match &a.cont {
        Continuation::Call { process, args } => format!("{process}({})", args.join(",")),
        Continuation::Stop => "()".to_string(),
    };
    format!("{prefix}; {cont}")
}

fn def(out: &mut String, keyword: &str, d: &ProcessDef) {
    let params: Vec<String> = d.params.iter().map(|p| format!("{p}:chan")).collect();
    let _ = writeln!(out, "{keyword} {}({}) =", d.name, params.join(","));
    if d.body.is_empty() && d.locals.is_empty() {
        out.push_str("  ()\n\n");
        return;
    }
    let mut lines: Vec<String> = d.locals.iter().map(decl).collect();
    match d.body.len() {
        0 => lines.push("()".to_string()),
        1 => lines.push(action(&d.body[0])),
        _ => {
            for (i, a) in d.body.iter().enumerate() {
                let lead = if i == 0 { "do" } else { "or" };
                lines.push(format!("{lead} {}", action(a)));
            }
        }
    }
    for (i, line) in lines.iter().enumerate() {
        let lead = if i == 0 { "  ( " } else { "    " };
        let tail = if i + 1 == lines.len() { " )" } else { "" };
        let _ = writeln!(out, "{lead}{line}{tail}");
    }
    out.push('\n');
}

/// SPiM-dialect text of `program`.
pub fn render(program: &PiProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "directive sample {}", format_rate(program.sample_time, 1));
    if !program.plot.is_empty() {
        out.push_str("directive plot");
        for (i, name) in program.plot.iter().enumerate() {
            if i > 0 {
                out.push(';');
                if i % 6 == 0 {
                    out.push_str("\n      ");
                }
            }
            let _ = write!(out, " {name}()");
        }
        out.push('\n');
    }
    out.push('\n');
    for g in &program.globals {
        let _ = writeln!(out, "{}", decl(g));
    }
    out.push('\n');
    for block in &program.blocks {
        for (i, d) in block.iter().enumerate() {
            def(&mut out, if i == 0 { "let" } else { "and" }, d);
        }
    }
    for r in &program.runs {
        let _ = writeln!(out, "run {} of {}()", r.count, r.process);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_keep_requested_decimals() {
        assert_eq!(format_rate(1.0, 1), "1.0");
        assert_eq!(format_rate(0.5, 2), "0.50");
        assert_eq!(format_rate(0.0, 1), "0.0");
        assert_eq!(format_rate(0.125, 2), "0.125");
        assert_eq!(format_rate(10.0, 1), "10.0");
    }

    #[test]
    fn declarations() {
        assert_eq!(decl(&ChannelDecl::new("fi1", 1.0, 1)), "new fi1@1.0:chan(chan)");
        assert_eq!(decl(&ChannelDecl::new("nil", 0.0, 0)), "new nil@0.0:chan");
        assert_eq!(decl(&ChannelDecl::new("ab1", 1.0, 2)), "new ab1@1.0:chan(chan,chan)");
    }

    #[test]
    fn actions() {
        let out = Action {
            prefix: Prefix::Output {
                channel: "fi1".into(),
                payload: vec!["f".into()],
                weight: Some(2.0),
            },
            cont: Continuation::Call {
                process: "FcR1".into(),
                args: vec!["f".into()],
            },
        };
        assert_eq!(action(&out), "!fi1(f)*2.0; FcR1(f)");
        let delay = Action {
            prefix: Prefix::Delay { rate: 0.5 },
            cont: Continuation::Stop,
        };
        assert_eq!(action(&delay), "delay@0.5; ()");
        let bare = Action {
            prefix: Prefix::Input {
                channel: "s1".into(),
                params: vec![],
            },
            cont: Continuation::Call {
                process: "FcR0".into(),
                args: vec![],
            },
        };
        assert_eq!(action(&bare), "?s1; FcR0()");
    }
}
