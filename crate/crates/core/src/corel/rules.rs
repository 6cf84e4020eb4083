//! Rule sets for coinductively defined relations, interpreted at finite
//! stages: the stage-0 approximant is the full relation, and a judgment
//! holds at stage n+1 when some rule's conclusion matches it with all
//! premises holding at stage n.

use std::collections::HashMap;
use std::rc::Rc;

use thiserror::Error;

use crate::coterm::{bisimilar_to_depth, Coterm, CotermError};
use crate::signature::{CtorTag, Signature, SortId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermPat {
    /// Metavariable over coterms; repeated occurrences force depth-bounded
    /// equality of the matched subterms.
    Var(String),
    /// `@x`: any sym constant, bound by name with exact equality.
    SymClass(String),
    Ctor(String, Vec<TermPat>),
}

#[derive(Debug, Clone)]
pub struct Rule {
    pub name: String,
    /// One pattern per relation argument.
    pub conclusion: Vec<TermPat>,
    /// Premises are relation applications over pattern variables.
    pub premises: Vec<Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct RuleSet {
    pub name: String,
    pub sig: Rc<Signature>,
    pub sort: SortId,
    pub arity: usize,
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RuleError {
    #[error("rule set parse error on line {line}: {msg}")]
    Parse { msg: String, line: usize },
    #[error("rule `{rule}` uses unbound premise variable `{var}`")]
    UnboundPremiseVar { rule: String, var: String },
    #[error(transparent)]
    Coterm(#[from] CotermError),
}

struct Bindings {
    terms: HashMap<String, Coterm>,
    syms: HashMap<String, String>,
}

impl RuleSet {
    /// Every premise variable must be bound by the conclusion, which keeps
    /// the induced operator monotone (premises occur positively only).
    pub fn validate(&self) -> Result<(), RuleError> {
        for rule in &self.rules {
            let mut bound = Vec::new();
            for pat in &rule.conclusion {
                collect_vars(pat, &mut bound);
            }
            for premise in &rule.premises {
                for v in premise {
                    if !bound.iter().any(|b| b == v) {
                        return Err(RuleError::UnboundPremiseVar {
                            rule: rule.name.clone(),
                            var: v.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Does the judgment hold at the given finite stage? This is a bounded
    /// approximation of the greatest fixpoint: stage-n truth never proves
    /// coinductive membership, and repeated metavariables are compared by
    /// bisimilarity to the stage depth.
    pub fn holds_at_stage(&self, args: &[Coterm], stage: usize) -> Result<bool, RuleError> {
        self.validate()?;
        let mut memo: HashMap<(Vec<usize>, usize), bool> = HashMap::new();
        self.holds(args, stage, &mut memo)
    }

    fn holds(
        &self,
        args: &[Coterm],
        stage: usize,
        memo: &mut HashMap<(Vec<usize>, usize), bool>,
    ) -> Result<bool, RuleError> {
        if stage == 0 {
            return Ok(true);
        }
        // Keyed by node identity: under-shares equal-but-distinct nodes,
        // which only costs recomputation. Premises strictly decrease the
        // stage, so recursion terminates without cycle handling.
        let key = (args.iter().map(Coterm::node_id).collect::<Vec<_>>(), stage);
        if let Some(v) = memo.get(&key) {
            return Ok(*v);
        }
        let mut out = false;
        'rules: for rule in &self.rules {
            let mut b = Bindings {
                terms: HashMap::new(),
                syms: HashMap::new(),
            };
            let mut ok = true;
            for (pat, arg) in rule.conclusion.iter().zip(args) {
                if !self.matches(pat, arg, stage, &mut b)? {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            for premise in &rule.premises {
                let pargs: Vec<Coterm> = premise
                    .iter()
                    .map(|v| b.terms[v].clone())
                    .collect();
                if !self.holds(&pargs, stage - 1, memo)? {
                    continue 'rules;
                }
            }
            out = true;
            break;
        }
        memo.insert(key, out);
        Ok(out)
    }

    fn matches(
        &self,
        pat: &TermPat,
        t: &Coterm,
        stage: usize,
        b: &mut Bindings,
    ) -> Result<bool, RuleError> {
        match pat {
            TermPat::Var(v) => match b.terms.get(v) {
                None => {
                    b.terms.insert(v.clone(), t.clone());
                    Ok(true)
                }
                Some(prev) => Ok(bisimilar_to_depth(prev, t, stage)?),
            },
            TermPat::SymClass(v) => {
                let (tag, _) = t.force()?;
                match tag {
                    CtorTag::Sym(name) => match b.syms.get(v) {
                        None => {
                            b.syms.insert(v.clone(), name);
                            Ok(true)
                        }
                        Some(prev) => Ok(*prev == name),
                    },
                    _ => Ok(false),
                }
            }
            TermPat::Ctor(c, kids) => {
                let (tag, children) = t.force()?;
                let matches_name = match &tag {
                    CtorTag::Named(id) => self.sig.ctor_name(*id) == c,
                    _ => false,
                };
                if !matches_name {
                    return Ok(false);
                }
                for (p, child) in kids.iter().zip(&children) {
                    if !self.matches(p, child, stage, b)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

fn collect_vars(pat: &TermPat, out: &mut Vec<String>) {
    match pat {
        TermPat::Var(v) => out.push(v.clone()),
        TermPat::SymClass(_) => {}
        TermPat::Ctor(_, kids) => kids.iter().for_each(|k| collect_vars(k, out)),
    }
}

/// Parses a rule-set file:
///
/// ```text
/// ruleset arrow over term arity 2
/// rule refl:  @x -> @x
/// rule congA: A(t) -> A(u)     <- t -> u
/// rule congB: B(s,t) -> B(u,v) <- s -> u, t -> v
/// rule dup:   A(t) -> B(u,u)   <- t -> u
/// ```
///
/// Judgment arguments in rules are separated by `->` (for binary
/// relations) or commas after the rule name; premises follow `<-`.
pub fn parse_ruleset(
    sig: &Rc<Signature>,
    text: &str,
) -> Result<RuleSet, RuleError> {
    let mut name = String::new();
    let mut sort = None;
    let mut arity = 2usize;
    let mut rules = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = match line.find('#') {
            Some(i) => &line[..i],
            None => line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let perr = |msg: &str| RuleError::Parse {
            msg: msg.to_string(),
            line: lineno + 1,
        };
        if let Some(rest) = line.strip_prefix("ruleset ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            // ruleset NAME over SORT [arity N]
            if parts.len() < 3 || parts[1] != "over" {
                return Err(perr("expected `ruleset NAME over SORT [arity N]`"));
            }
            name = parts[0].to_string();
            sort = Some(
                sig.sort(parts[2])
                    .ok_or_else(|| perr(&format!("unknown sort `{}`", parts[2])))?,
            );
            if let [.., "arity", n] = parts.as_slice() {
                arity = n.parse().map_err(|_| perr("bad arity"))?;
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix("rule ") {
            let (rname, body) = rest
                .split_once(':')
                .ok_or_else(|| perr("expected `rule NAME: ...`"))?;
            let (conc, prem) = match body.split_once("<-") {
                Some((c, p)) => (c, Some(p)),
                None => (body, None),
            };
            let conclusion = parse_judgment(conc, lineno + 1)?;
            if conclusion.len() != arity {
                return Err(perr(&format!(
                    "conclusion has {} arguments, relation arity is {arity}",
                    conclusion.len()
                )));
            }
            let mut premises = Vec::new();
            if let Some(p) = prem {
                for one in p.split(';') {
                    let pats = parse_judgment(one, lineno + 1)?;
                    let vars = pats
                        .iter()
                        .map(|p| match p {
                            TermPat::Var(v) => Ok(v.clone()),
                            _ => Err(perr("premises may only mention pattern variables")),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    if vars.len() != arity {
                        return Err(perr("premise arity mismatch"));
                    }
                    premises.push(vars);
                }
            }
            rules.push(Rule {
                name: rname.trim().to_string(),
                conclusion,
                premises,
            });
            continue;
        }
        return Err(perr("expected `ruleset` or `rule`"));
    }
    let sort = sort.ok_or(RuleError::Parse {
        msg: "missing `ruleset` header".to_string(),
        line: 1,
    })?;
    let rs = RuleSet {
        name,
        sig: Rc::clone(sig),
        sort,
        arity,
        rules,
    };
    rs.validate()?;
    Ok(rs)
}

/// `lhs -> rhs` or a comma-separated argument list of term patterns.
pub fn parse_judgment(text: &str, line: usize) -> Result<Vec<TermPat>, RuleError> {
    let parts: Vec<&str> = if text.contains("->") {
        text.split("->").collect()
    } else {
        text.split(',').collect()
    };
    parts
        .iter()
        .map(|p| parse_term_pat(p.trim(), line))
        .collect()
}

fn parse_term_pat(text: &str, line: usize) -> Result<TermPat, RuleError> {
    struct P<'a> {
        b: &'a [u8],
        i: usize,
        line: usize,
    }
    impl<'a> P<'a> {
        fn err(&self, msg: &str) -> RuleError {
            RuleError::Parse {
                msg: msg.to_string(),
                line: self.line,
            }
        }
        fn skip_ws(&mut self) {
            while self.i < self.b.len() && (self.b[self.i] as char).is_whitespace() {
                self.i += 1;
            }
        }
        fn eat(&mut self, c: char) -> bool {
            self.skip_ws();
            if self.i < self.b.len() && self.b[self.i] as char == c {
                self.i += 1;
                true
            } else {
                false
            }
        }
        fn ident(&mut self) -> Option<String> {
            self.skip_ws();
            let start = self.i;
            while self.i < self.b.len() {
                let c = self.b[self.i] as char;
                if c.is_alphanumeric() || c == '_' || c == '\'' {
                    self.i += 1;
                } else {
                    break;
                }
            }
            (self.i > start).then(|| String::from_utf8_lossy(&self.b[start..self.i]).into_owned())
        }
        fn pat(&mut self) -> Result<TermPat, RuleError> {
            if self.eat('@') {
                let v = self.ident().ok_or_else(|| self.err("expected a name after `@`"))?;
                return Ok(TermPat::SymClass(v));
            }
            let name = self.ident().ok_or_else(|| self.err("expected a pattern"))?;
            if self.eat('(') {
                let mut args = Vec::new();
                if !self.eat(')') {
                    loop {
                        args.push(self.pat()?);
                        if self.eat(')') {
                            break;
                        }
                        if !self.eat(',') {
                            return Err(self.err("expected `,` or `)`"));
                        }
                    }
                }
                return Ok(TermPat::Ctor(name, args));
            }
            Ok(TermPat::Var(name))
        }
    }
    let mut p = P {
        b: text.as_bytes(),
        i: 0,
        line,
    };
    let pat = p.pat()?;
    p.skip_ws();
    if p.i != p.b.len() {
        return Err(p.err("trailing input in pattern"));
    }
    Ok(pat)
}
