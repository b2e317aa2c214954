use super::{Formula, FormulaError, Literal, Pred, Var, Vocabulary, RESERVED_NAMES};

const SYMBOL_CHARS: &str = "<>=!~+*-/^&|%$@?.";

/// Variables follow `[A-Za-z_][A-Za-z0-9_]*` and may not be keywords.
pub(crate) fn is_var_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_') && !RESERVED_NAMES.contains(&s)
}

/// Relation names are identifiers or operator-like symbols such as `<=`.
pub(crate) fn is_relation_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' || SYMBOL_CHARS.contains(c) => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || SYMBOL_CHARS.contains(c)) && !RESERVED_NAMES.contains(&s)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Word(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Tok<'_>)> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'(' {
            out.push((i, Tok::Open));
            i += 1;
        } else if c == b')' {
            out.push((i, Tok::Close));
            i += 1;
        } else {
            let start = i;
            while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'(' && bytes[i] != b')' {
                i += 1;
            }
            out.push((start, Tok::Word(&text[start..i])));
        }
    }
    out
}

struct Parser<'a, 'v> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
    end: usize,
    vocab: &'v Vocabulary,
}

impl<'a> Parser<'a, '_> {
    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.0).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax { pos: self.offset(), msg: msg.into() })
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos).map(|t| &t.1)
    }

    fn next(&mut self) -> Option<Tok<'a>> {
        let t = self.toks.get(self.pos).map(|t| t.1.clone());
        self.pos += 1;
        t
    }

    fn expect_open(&mut self) -> Result<(), FormulaError> {
        match self.peek() {
            Some(Tok::Open) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected `(`"),
        }
    }

    fn expect_close(&mut self) -> Result<(), FormulaError> {
        match self.peek() {
            Some(Tok::Close) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected `)`"),
        }
    }

    fn var(&mut self) -> Result<Var, FormulaError> {
        match self.peek() {
            Some(Tok::Word(w)) if is_var_name(w) => {
                let v = Var::new(*w);
                self.pos += 1;
                Ok(v)
            }
            _ => self.err("expected a variable"),
        }
    }

    fn formula(&mut self) -> Result<Formula, FormulaError> {
        match self.peek() {
            Some(Tok::Word("true")) => {
                self.pos += 1;
                return Ok(Formula::Top);
            }
            Some(Tok::Word("false")) => {
                self.pos += 1;
                return Ok(Formula::Bot);
            }
            Some(Tok::Open) => {}
            Some(Tok::Word(_)) => return self.err("expected `(`, `true` or `false`"),
            Some(Tok::Close) => return self.err("unexpected `)`"),
            None => return self.err("unexpected end of input"),
        }
        self.pos += 1;
        let head = match self.peek() {
            Some(Tok::Word(w)) => *w,
            _ => return self.err("expected an operator or relation name"),
        };
        match head {
            "exists" | "forall" => {
                self.pos += 1;
                self.expect_open()?;
                let mut vars = vec![self.var()?];
                while !matches!(self.peek(), Some(Tok::Close)) {
                    vars.push(self.var()?);
                }
                self.pos += 1;
                let mut body = self.formula()?;
                self.expect_close()?;
                for v in vars.into_iter().rev() {
                    body = if head == "exists" {
                        Formula::Exists(v, Box::new(body))
                    } else {
                        Formula::Forall(v, Box::new(body))
                    };
                }
                Ok(body)
            }
            "and" | "or" => {
                self.pos += 1;
                let mut children = vec![self.formula()?];
                while !matches!(self.peek(), Some(Tok::Close)) {
                    children.push(self.formula()?);
                }
                self.pos += 1;
                if children.len() == 1 {
                    return Ok(children.pop().unwrap());
                }
                Ok(if head == "and" { Formula::And(children) } else { Formula::Or(children) })
            }
            "not" => {
                self.pos += 1;
                let at = self.offset();
                if !matches!(self.peek(), Some(Tok::Open)) {
                    return Err(FormulaError::NotNnf { pos: at });
                }
                match self.toks.get(self.pos + 1).map(|t| &t.1) {
                    Some(Tok::Word(w)) if !matches!(*w, "exists" | "forall" | "and" | "or" | "not") => {}
                    _ => return Err(FormulaError::NotNnf { pos: at }),
                }
                self.pos += 1;
                let lit = self.atom_rest()?;
                self.expect_close()?;
                Ok(Formula::Lit(lit.negated()))
            }
            _ => Ok(Formula::Lit(self.atom_rest()?)),
        }
    }

    /// Parses `NAME var* )` after the opening parenthesis.
    fn atom_rest(&mut self) -> Result<Literal, FormulaError> {
        let name_at = self.offset();
        let name = match self.next() {
            Some(Tok::Word(w)) => w,
            _ => {
                self.pos -= 1;
                return self.err("expected a relation name");
            }
        };
        let mut args = Vec::new();
        while !matches!(self.peek(), Some(Tok::Close)) {
            args.push(self.var()?);
        }
        self.pos += 1;
        let (pred, expected) = if name == "=" {
            (Pred::Eq, 2)
        } else if RESERVED_NAMES.contains(&name) || !is_relation_name(name) {
            return Err(FormulaError::Syntax { pos: name_at, msg: format!("`{name}` is not a relation name") });
        } else {
            let arity = self.vocab.arity(name).ok_or_else(|| FormulaError::UnknownRelation(name.to_string()))?;
            (Pred::Rel(name.to_string()), arity)
        };
        if args.len() != expected {
            return Err(FormulaError::ArityMismatch { relation: name.to_string(), expected, found: args.len() });
        }
        Ok(Literal::atom(pred, args))
    }
}

/// Parses the s-expression syntax, checks it against `vocab`, and returns
/// the alpha-normalized AST.
pub fn parse_formula(text: &str, vocab: &Vocabulary) -> Result<Formula, FormulaError> {
    let mut p = Parser { toks: tokenize(text), pos: 0, end: text.len(), vocab };
    let f = p.formula()?;
    if p.pos < p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f.alpha_normalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::print_formula;

    fn vocab() -> Vocabulary {
        Vocabulary::new([("E", 2), ("U", 1), ("<=", 2)]).unwrap()
    }

    #[test]
    fn parses_atoms_and_flattens_unary_connectives() {
        let v = vocab();
        assert_eq!(parse_formula("(E x y)", &v).unwrap(), Formula::rel("E", &["x", "y"]));
        assert_eq!(parse_formula("(and (E x y))", &v).unwrap(), Formula::rel("E", &["x", "y"]));
        assert_eq!(parse_formula("(or (<= x y))", &v).unwrap(), Formula::rel("<=", &["x", "y"]));
    }

    #[test]
    fn desugars_quantifier_blocks() {
        let f = parse_formula("(exists (x y) (E x y))", &vocab()).unwrap();
        assert_eq!(f, Formula::exists("x", Formula::exists("y", Formula::rel("E", &["x", "y"]))));
        assert_eq!(print_formula(&f), "(exists (x) (exists (y) (E x y)))");
    }

    #[test]
    fn reports_errors() {
        let v = vocab();
        assert!(matches!(parse_formula("(E x)", &v), Err(FormulaError::ArityMismatch { .. })));
        assert!(matches!(parse_formula("(F x)", &v), Err(FormulaError::UnknownRelation(_))));
        assert!(matches!(parse_formula("(not (and (U x)))", &v), Err(FormulaError::NotNnf { .. })));
        assert!(matches!(parse_formula("(not true)", &v), Err(FormulaError::NotNnf { .. })));
        assert!(matches!(parse_formula("(U x", &v), Err(FormulaError::Syntax { pos: 4, .. })));
        assert!(matches!(parse_formula("(U x) (U y)", &v), Err(FormulaError::Syntax { pos: 6, .. })));
        assert!(matches!(parse_formula("(and)", &v), Err(FormulaError::Syntax { .. })));
        assert!(matches!(parse_formula("(exists () true)", &v), Err(FormulaError::Syntax { .. })));
        assert!(matches!(parse_formula("(U 1x)", &v), Err(FormulaError::Syntax { .. })));
    }

    #[test]
    fn parses_equality_and_negation() {
        let v = vocab();
        let f = parse_formula("(or (= x y) (not (= x y)) (not (U x)) true false)", &v).unwrap();
        assert_eq!(print_formula(&f), "(or (= x y) (not (= x y)) (not (U x)) true false)");
    }

    #[test]
    fn renames_colliding_binders() {
        let f = parse_formula("(and (U x) (exists (x) (U x)))", &vocab()).unwrap();
        assert_eq!(print_formula(&f), "(and (U x) (exists (x_1) (U x_1)))");
    }
}
