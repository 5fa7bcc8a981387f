use super::{BAtom, BTerm, Formula, Term};
use std::fmt;

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var { name, .. } | Term::Const { name, .. } => write!(f, "{name}"),
            Term::Num { value, .. } => write!(f, "{value}"),
            Term::App { func, args, .. } => {
                write!(f, "({func}")?;
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl fmt::Display for BTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BTerm::Var(v) => write!(f, "{v}"),
            BTerm::Slot(i) => write!(f, "(bv {i})"),
            BTerm::ValueOf(phi) => write!(f, "(bv-of {phi})"),
            BTerm::Zero => write!(f, "0"),
            BTerm::One => write!(f, "1"),
            BTerm::Meet(a, b) => write!(f, "(meet {a} {b})"),
            BTerm::Join(a, b) => write!(f, "(join {a} {b})"),
            BTerm::Compl(a) => write!(f, "(compl {a})"),
        }
    }
}

impl fmt::Display for BAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BAtom::Fin(t) => write!(f, "(fin {t})"),
            BAtom::Cj(j, t) => write!(f, "(cj {j} {t})"),
            BAtom::Eq(a, b) => write!(f, "(= {a} {b})"),
            BAtom::Le(a, b) => write!(f, "(le {a} {b})"),
        }
    }
}

fn list(f: &mut fmt::Formatter<'_>, head: &str, items: &[Formula]) -> fmt::Result {
    write!(f, "({head}")?;
    for x in items {
        write!(f, " {x}")?;
    }
    write!(f, ")")
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom { rel, index, args } => {
                write!(f, "({rel}")?;
                if let Some(k) = index {
                    write!(f, " {k}")?;
                }
                for a in args {
                    write!(f, " {a}")?;
                }
                write!(f, ")")
            }
            Formula::Eq(a, b) => write!(f, "(= {a} {b})"),
            Formula::Bool(a) => write!(f, "{a}"),
            Formula::Not(g) => write!(f, "(not {g})"),
            Formula::And(xs) => list(f, "and", xs),
            Formula::Or(xs) => list(f, "or", xs),
            Formula::Implies(a, b) => write!(f, "(implies {a} {b})"),
            Formula::Exists(v, srt, b) => write!(f, "(exists ({v} {srt}) {b})"),
            Formula::Forall(v, srt, b) => write!(f, "(forall ({v} {srt}) {b})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::*;

    #[test]
    fn renders_basic_shapes() {
        let x = Term::var("x", "field");
        let zero = Term::constant("0", "field");
        assert_eq!(Formula::Eq(x.clone(), zero.clone()).to_string(), "(= x 0)");
        assert_eq!(Formula::not(Formula::atom("V", vec![x.clone()])).to_string(), "(not (V x))");
        let e = Term::var("e", "field");
        let ee = Term::app("*", vec![e.clone(), e.clone()], "field");
        let f = Formula::exists(
            "e",
            "field",
            Formula::And(vec![Formula::Eq(ee, e.clone()), Formula::not(Formula::Eq(e, zero))]),
        );
        assert_eq!(f.to_string(), "(exists (e field) (and (= (* e e) e) (not (= e 0))))");
        assert_eq!(Formula::fin(BTerm::Slot(0)).to_string(), "(fin (bv 0))");
        assert_eq!(Formula::cj(2, BTerm::not(BTerm::var("y"))).to_string(), "(cj 2 (compl y))");
    }
}
