//! Many-sorted algebraic signatures.
//!
//! A signature declares sorts and constructors with argument and result
//! sorts. Besides explicitly declared constructors, a sort may be opened to
//! an infinite family of constants: all integers, or all identifier-named
//! symbols. This keeps streams of numbers and terms with a countable
//! variable pool finitely declarable.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SortId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CtorId(pub(crate) usize);

#[derive(Debug, Clone)]
struct SortDecl {
    name: String,
    int_consts: bool,
    sym_consts: bool,
}

#[derive(Debug, Clone)]
struct CtorDecl {
    name: String,
    args: Vec<SortId>,
    result: SortId,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SignatureError {
    #[error("duplicate sort `{0}`")]
    DuplicateSort(String),
    #[error("duplicate constructor `{0}`")]
    DuplicateCtor(String),
    #[error("unknown sort `{0}`")]
    UnknownSort(String),
}

/// A constructor occurrence in a tree: a declared constructor or a member of
/// an open constant family. Open-family constants always have arity 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CtorTag {
    Named(CtorId),
    Int(i64),
    Sym(String),
}

#[derive(Debug, Clone)]
pub struct Signature {
    sorts: Vec<SortDecl>,
    ctors: Vec<CtorDecl>,
    sort_by_name: HashMap<String, SortId>,
    ctor_by_name: HashMap<String, CtorId>,
}

impl Signature {
    pub fn builder() -> SignatureBuilder {
        SignatureBuilder::default()
    }

    pub fn sort(&self, name: &str) -> Option<SortId> {
        self.sort_by_name.get(name).copied()
    }

    pub fn ctor(&self, name: &str) -> Option<CtorId> {
        self.ctor_by_name.get(name).copied()
    }

    pub fn sort_name(&self, s: SortId) -> &str {
        &self.sorts[s.0].name
    }

    pub fn ctor_name(&self, c: CtorId) -> &str {
        &self.ctors[c.0].name
    }

    pub fn ctor_args(&self, c: CtorId) -> &[SortId] {
        &self.ctors[c.0].args
    }

    pub fn ctor_result(&self, c: CtorId) -> SortId {
        self.ctors[c.0].result
    }

    pub fn int_constants_allowed(&self, s: SortId) -> bool {
        self.sorts[s.0].int_consts
    }

    pub fn sym_constants_allowed(&self, s: SortId) -> bool {
        self.sorts[s.0].sym_consts
    }

    pub fn arity(&self, tag: &CtorTag) -> usize {
        match tag {
            CtorTag::Named(c) => self.ctor_args(*c).len(),
            CtorTag::Int(_) | CtorTag::Sym(_) => 0,
        }
    }

    /// Whether `tag` may label a node of sort `s`.
    pub fn tag_fits_sort(&self, tag: &CtorTag, s: SortId) -> bool {
        match tag {
            CtorTag::Named(c) => self.ctor_result(*c) == s,
            CtorTag::Int(_) => self.int_constants_allowed(s),
            CtorTag::Sym(_) => self.sym_constants_allowed(s),
        }
    }

    pub fn tag_display(&self, tag: &CtorTag) -> String {
        match tag {
            CtorTag::Named(c) => self.ctor_name(*c).to_string(),
            CtorTag::Int(n) => n.to_string(),
            CtorTag::Sym(x) => x.clone(),
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.ctors {
            let args: Vec<&str> = c.args.iter().map(|s| self.sort_name(*s)).collect();
            writeln!(
                f,
                "{} : ({}) -> {}",
                c.name,
                args.join(", "),
                self.sort_name(c.result)
            )?;
        }
        Ok(())
    }
}

#[derive(Default)]
pub struct SignatureBuilder {
    sorts: Vec<SortDecl>,
    ctors: Vec<(String, Vec<String>, String)>,
}

impl SignatureBuilder {
    pub fn sort(mut self, name: &str) -> Self {
        self.sorts.push(SortDecl {
            name: name.to_string(),
            int_consts: false,
            sym_consts: false,
        });
        self
    }

    /// Declares a sort whose constants are all integers.
    pub fn int_sort(mut self, name: &str) -> Self {
        self.sorts.push(SortDecl {
            name: name.to_string(),
            int_consts: true,
            sym_consts: false,
        });
        self
    }

    /// Opens the most recently declared sort to identifier-named constants.
    pub fn with_sym_constants(mut self) -> Self {
        if let Some(last) = self.sorts.last_mut() {
            last.sym_consts = true;
        }
        self
    }

    pub fn ctor(mut self, name: &str, args: &[&str], result: &str) -> Self {
        self.ctors.push((
            name.to_string(),
            args.iter().map(|s| s.to_string()).collect(),
            result.to_string(),
        ));
        self
    }

    pub fn build(self) -> Result<Signature, SignatureError> {
        let mut sort_by_name = HashMap::new();
        for (i, s) in self.sorts.iter().enumerate() {
            if sort_by_name.insert(s.name.clone(), SortId(i)).is_some() {
                return Err(SignatureError::DuplicateSort(s.name.clone()));
            }
        }
        let mut ctor_by_name = HashMap::new();
        let mut ctors = Vec::new();
        for (i, (name, args, result)) in self.ctors.iter().enumerate() {
            if ctor_by_name.insert(name.clone(), CtorId(i)).is_some() {
                return Err(SignatureError::DuplicateCtor(name.clone()));
            }
            let resolve = |n: &String| {
                sort_by_name
                    .get(n)
                    .copied()
                    .ok_or_else(|| SignatureError::UnknownSort(n.clone()))
            };
            ctors.push(CtorDecl {
                name: name.clone(),
                args: args.iter().map(resolve).collect::<Result<_, _>>()?,
                result: resolve(result)?,
            });
        }
        Ok(Signature {
            sorts: self.sorts,
            ctors,
            sort_by_name,
            ctor_by_name,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stream_signature_builds() {
        let sig = Signature::builder()
            .int_sort("d")
            .sort("s")
            .ctor("cons", &["d", "s"], "s")
            .build()
            .unwrap();
        let cons = sig.ctor("cons").unwrap();
        assert_eq!(sig.ctor_args(cons).len(), 2);
        assert!(sig.tag_fits_sort(&CtorTag::Int(7), sig.sort("d").unwrap()));
        assert!(!sig.tag_fits_sort(&CtorTag::Int(7), sig.sort("s").unwrap()));
    }

    #[test]
    fn rejects_duplicate_ctor() {
        let err = Signature::builder()
            .sort("t")
            .ctor("a", &["t"], "t")
            .ctor("a", &["t", "t"], "t")
            .build()
            .unwrap_err();
        assert_eq!(err, SignatureError::DuplicateCtor("a".into()));
    }

    #[test]
    fn rejects_unknown_sort() {
        let err = Signature::builder()
            .sort("t")
            .ctor("a", &["u"], "t")
            .build()
            .unwrap_err();
        assert_eq!(err, SignatureError::UnknownSort("u".into()));
    }
}
