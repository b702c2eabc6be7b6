//! Partial assignments (clamping): fixing variables to constants or tying
//! pairs equal/negated, applying the result to an instance, and expanding
//! reduced vectors back to the full space.
//!
//! Two text formats construct assignments:
//!
//! **Assignment expressions** — statements separated by `;`, whitespace
//! insignificant:
//!
//! ```text
//! stmt_list := stmt (';' stmt)*
//! stmt      := varlist ('=' | '!=') rhs
//! varlist   := var (',' var)*
//! var       := 'x' digits
//! rhs       := ['!'] ('0' | '1' | var)
//! ```
//!
//! `x0, x3 = 0` fixes variables, `x12 = x8` ties them equal, `x13 != x9`
//! (or `x13 = !x9`) ties them negated. `x != 0` means `x = 1`.
//!
//! **Bit vector expressions** — one token per variable position:
//! `0` and `1` fix constants, `*` leaves the position free, `[k]` ties the
//! position to variable `k`, `[!k]` to its negation. `'**00**[1]*1[!4]1'`
//! describes 11 variables with x2 = x3 = 0, x6 = x1, x8 = x10 = 1 and
//! x9 = !x4.

use std::fmt;

use crate::bitvec::BitVector;
use crate::error::{Error, Result};
use crate::instance::QuboInstance;

/// Cap on the number of free variables [`PartialAssignment::enumerate_matches`]
/// will expand by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Constant(bool),
    /// Tied to the representative (lowest index) of its class. The
    /// representative itself is `Tied { rep: self, negated: false }`.
    Tied { rep: usize, negated: bool },
}

/// A conflict-free set of parity constraints over `n` variables.
///
/// Internally every variable either carries a constant or points at the
/// lowest-index member of its parity class. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialAssignment {
    n: usize,
    states: Vec<VarState>,
    free_reps: Vec<usize>,
    /// Position of each free representative in `free_reps`; dense lookup.
    rep_slot: Vec<usize>,
}

impl PartialAssignment {
    /// The assignment constraining nothing.
    pub fn identity(n: usize) -> Self {
        Builder::new(n).freeze()
    }

    /// Parses an assignment expression (see module docs) over `n` variables.
    pub fn parse_expr(expr: &str, n: usize) -> Result<Self> {
        let mut builder = Builder::new(n);
        ExprParser::new(expr, n).parse_into(&mut builder)?;
        Ok(builder.freeze())
    }

    /// Parses a bit vector expression (see module docs). The number of
    /// variables is the number of tokens.
    pub fn parse_bitvec_expr(expr: &str) -> Result<Self> {
        let tokens = tokenize_bitvec_expr(expr)?;
        let n = tokens.len();
        let mut builder = Builder::new(n);
        for (p, tok) in tokens.iter().enumerate() {
            match *tok {
                BitvecToken::Free => {}
                BitvecToken::Constant(c) => builder.set_constant(p, c)?,
                BitvecToken::Reference { target, negated, pos } => {
                    if target >= n {
                        return Err(Error::IndexOutOfRange { index: target, n });
                    }
                    let _ = pos;
                    builder.tie(p, target, negated)?;
                }
            }
        }
        Ok(builder.freeze())
    }

    /// Fixes the listed variables to constants, leaving the rest free.
    pub fn from_pairs(pairs: &[(usize, bool)], n: usize) -> Result<Self> {
        let mut builder = Builder::new(n);
        for &(index, value) in pairs {
            if index >= n {
                return Err(Error::IndexOutOfRange { index, n });
            }
            builder.set_constant(index, value)?;
        }
        Ok(builder.freeze())
    }

    pub(crate) fn from_builder(builder: Builder) -> Self {
        builder.freeze()
    }

    /// Number of variables in the full space.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of free variables (one per unconstrained parity class).
    pub fn free_count(&self) -> usize {
        self.free_reps.len()
    }

    /// The free class representatives in ascending index order; these are
    /// the variables of the reduced space, in order.
    pub fn free_representatives(&self) -> &[usize] {
        &self.free_reps
    }

    pub fn is_identity(&self) -> bool {
        self.free_count() == self.n && self.states.iter().enumerate().all(|(i, s)| {
            matches!(s, VarState::Tied { rep, negated: false } if *rep == i)
        })
    }

    /// Substitutes the constraints into `q`, returning the instance over the
    /// free variables plus the constant energy offset: for every reduced
    /// vector `y`, `E_q(expand(y)) == E_reduced(y) + constant`.
    pub fn apply(&self, q: &QuboInstance) -> Result<(QuboInstance, f64)> {
        if q.n() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: q.n(),
            });
        }
        // x_i = offset_i + sign_i * y_{slot_i}
        let mut offset = vec![0.0; self.n];
        let mut sign = vec![0.0; self.n];
        let mut slot = vec![usize::MAX; self.n];
        for i in 0..self.n {
            match self.states[i] {
                VarState::Constant(c) => offset[i] = c as u8 as f64,
                VarState::Tied { rep, negated } => {
                    slot[i] = self.rep_slot[rep];
                    if negated {
                        offset[i] = 1.0;
                        sign[i] = -1.0;
                    } else {
                        sign[i] = 1.0;
                    }
                }
            }
        }
        let m = self.free_reps.len();
        let mut reduced = QuboInstance::zeros(m);
        let mut constant = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                let w = q.weight(i, j);
                if w == 0.0 {
                    continue;
                }
                constant += w * offset[i] * offset[j];
                if sign[j] != 0.0 && w * offset[i] != 0.0 {
                    reduced.add_weight(slot[j], slot[j], w * offset[i] * sign[j]);
                }
                if sign[i] != 0.0 && w * offset[j] != 0.0 {
                    reduced.add_weight(slot[i], slot[i], w * offset[j] * sign[i]);
                }
                if sign[i] != 0.0 && sign[j] != 0.0 {
                    let coeff = w * sign[i] * sign[j];
                    if slot[i] == slot[j] {
                        // y^2 = y on {0,1}
                        reduced.add_weight(slot[i], slot[i], coeff);
                    } else {
                        let (a, b) = if slot[i] < slot[j] {
                            (slot[i], slot[j])
                        } else {
                            (slot[j], slot[i])
                        };
                        reduced.add_weight(a, b, coeff);
                    }
                }
            }
        }
        Ok((reduced, constant))
    }

    /// Re-inserts clamped variables: maps a reduced vector back to the full
    /// space, resolving constants and ties.
    pub fn expand(&self, reduced: &[bool]) -> Result<BitVector> {
        if reduced.len() != self.free_reps.len() {
            return Err(Error::LengthMismatch {
                expected: self.free_reps.len(),
                got: reduced.len(),
            });
        }
        let bits = (0..self.n)
            .map(|i| match self.states[i] {
                VarState::Constant(c) => c,
                VarState::Tied { rep, negated } => reduced[self.rep_slot[rep]] ^ negated,
            })
            .collect();
        Ok(BitVector::new(bits))
    }

    /// Whether a full vector satisfies every constraint.
    pub fn matches(&self, x: &[bool]) -> Result<bool> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.states.iter().enumerate().all(|(i, s)| match *s {
            VarState::Constant(c) => x[i] == c,
            VarState::Tied { rep, negated } => x[i] == (x[rep] ^ negated),
        }))
    }

    /// Streams all full vectors consistent with the constraints, in
    /// ascending reduced-index order.
    pub fn enumerate_matches(&self) -> Result<impl Iterator<Item = BitVector> + '_> {
        self.enumerate_matches_capped(DEFAULT_ENUMERATION_CAP)
    }

    /// As [`PartialAssignment::enumerate_matches`] with an explicit cap on
    /// the number of free variables.
    pub fn enumerate_matches_capped(
        &self,
        cap: usize,
    ) -> Result<impl Iterator<Item = BitVector> + '_> {
        let m = self.free_reps.len();
        if m > cap {
            return Err(Error::ResourceCap {
                operation: "enumerate_matches",
                n: m,
                cap,
            });
        }
        Ok((0..(1u64 << m)).map(move |k| {
            let reduced: Vec<bool> = (0..m).map(|i| (k >> i) & 1 == 1).collect();
            self.expand(&reduced).expect("length is consistent")
        }))
    }

    /// Canonical text form: the zero constants, the one constants, then tie
    /// statements with the higher index on the left, groups ascending,
    /// joined by `"; "`. Parsing the output reproduces an equivalent
    /// assignment; the identity prints as the empty string.
    pub fn to_canonical_string(&self) -> String {
        let mut zeros = Vec::new();
        let mut ones = Vec::new();
        let mut ties = Vec::new();
        for i in 0..self.n {
            match self.states[i] {
                VarState::Constant(false) => zeros.push(i),
                VarState::Constant(true) => ones.push(i),
                VarState::Tied { rep, negated } if rep != i => {
                    ties.push((rep, i, negated));
                }
                VarState::Tied { .. } => {}
            }
        }
        let mut stmts = Vec::new();
        if !zeros.is_empty() {
            stmts.push(format!("{} = 0", var_list(&zeros)));
        }
        if !ones.is_empty() {
            stmts.push(format!("{} = 1", var_list(&ones)));
        }
        ties.sort_unstable();
        for (rep, member, negated) in ties {
            let op = if negated { "!=" } else { "=" };
            stmts.push(format!("x{member} {op} x{rep}"));
        }
        stmts.join("; ")
    }
}

impl fmt::Display for PartialAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

fn var_list(indices: &[usize]) -> String {
    indices
        .iter()
        .map(|i| format!("x{i}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Union-find over the variables plus one distinguished constant node,
/// with a parity bit on every link. Constants are parity links to the
/// constant node, so constant/tie composition and conflict detection are
/// uniform.
pub(crate) struct Builder {
    n: usize,
    parent: Vec<usize>,
    parity: Vec<bool>,
    size: Vec<u32>,
}

impl Builder {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            n,
            parent: (0..=n).collect(),
            parity: vec![false; n + 1],
            size: vec![1; n + 1],
        }
    }

    fn find(&mut self, v: usize) -> (usize, bool) {
        if self.parent[v] == v {
            return (v, false);
        }
        let (root, par) = self.find(self.parent[v]);
        let total = par ^ self.parity[v];
        self.parent[v] = root;
        self.parity[v] = total;
        (root, total)
    }

    fn union(&mut self, a: usize, b: usize, negated: bool) -> std::result::Result<(), ()> {
        let (ra, pa) = self.find(a);
        let (rb, pb) = self.find(b);
        if ra == rb {
            return if pa ^ pb == negated { Ok(()) } else { Err(()) };
        }
        let (child, parent, child_parity) = if self.size[ra] < self.size[rb] {
            (ra, rb, pa ^ pb ^ negated)
        } else {
            (rb, ra, pa ^ pb ^ negated)
        };
        self.parent[child] = parent;
        self.parity[child] = child_parity;
        self.size[parent] += self.size[child];
        Ok(())
    }

    /// Constrains `x_v = value`.
    pub(crate) fn set_constant(&mut self, v: usize, value: bool) -> Result<()> {
        let zero_node = self.n;
        self.union(v, zero_node, value)
            .map_err(|_| Error::Conflict { a: v, b: v })
    }

    /// Constrains `x_a = x_b` (or `x_a = !x_b` when negated).
    pub(crate) fn tie(&mut self, a: usize, b: usize, negated: bool) -> Result<()> {
        self.union(a, b, negated)
            .map_err(|_| Error::Conflict { a, b })
    }

    pub(crate) fn freeze(mut self) -> PartialAssignment {
        let n = self.n;
        let (zero_root, _) = self.find(n);
        // representative of each non-constant class: its lowest variable
        let mut rep_of_root = vec![usize::MAX; n + 1];
        let mut resolved = Vec::with_capacity(n);
        for v in 0..n {
            let (root, par) = self.find(v);
            resolved.push((root, par));
            if root != zero_root && rep_of_root[root] == usize::MAX {
                rep_of_root[root] = v;
            }
        }
        let (_, zero_par) = self.find(n);
        let mut states = Vec::with_capacity(n);
        let mut free_reps = Vec::new();
        for v in 0..n {
            let (root, par) = resolved[v];
            if root == zero_root {
                states.push(VarState::Constant(par ^ zero_par));
            } else {
                let rep = rep_of_root[root];
                let (_, rep_par) = self.find(rep);
                if rep == v {
                    free_reps.push(v);
                }
                states.push(VarState::Tied {
                    rep,
                    negated: par ^ rep_par,
                });
            }
        }
        let mut rep_slot = vec![usize::MAX; n];
        for (slot, &rep) in free_reps.iter().enumerate() {
            rep_slot[rep] = slot;
        }
        PartialAssignment {
            n,
            states,
            free_reps,
            rep_slot,
        }
    }
}

// ---------------------------------------------------------------------------
// assignment expression parser

enum Rhs {
    Constant(bool),
    Var(usize),
}

struct ExprParser<'a> {
    src: &'a [u8],
    pos: usize,
    n: usize,
}

impl<'a> ExprParser<'a> {
    fn new(expr: &'a str, n: usize) -> Self {
        Self {
            src: expr.as_bytes(),
            pos: 0,
            n,
        }
    }

    fn parse_into(&mut self, builder: &mut Builder) -> Result<()> {
        self.skip_ws();
        if self.at_end() {
            return Ok(());
        }
        loop {
            self.statement(builder)?;
            self.skip_ws();
            if self.at_end() {
                return Ok(());
            }
            self.expect(b';')?;
            self.skip_ws();
        }
    }

    fn statement(&mut self, builder: &mut Builder) -> Result<()> {
        let mut vars = vec![self.variable()?];
        loop {
            self.skip_ws();
            if self.peek() == Some(b',') {
                self.pos += 1;
                self.skip_ws();
                vars.push(self.variable()?);
            } else {
                break;
            }
        }
        self.skip_ws();
        let mut negated = false;
        match self.peek() {
            Some(b'!') if self.peek_at(1) == Some(b'=') => {
                self.pos += 2;
                negated = true;
            }
            Some(b'=') => {
                self.pos += 1;
            }
            _ => {
                return Err(self.error("expected '=' or '!='"));
            }
        }
        self.skip_ws();
        if self.peek() == Some(b'!') {
            // 'x5 =! x4' reads as x5 = !x4
            self.pos += 1;
            negated = !negated;
            self.skip_ws();
        }
        let rhs = match self.peek() {
            Some(b'0') => {
                self.pos += 1;
                Rhs::Constant(false)
            }
            Some(b'1') => {
                self.pos += 1;
                Rhs::Constant(true)
            }
            Some(b'x') => Rhs::Var(self.variable()?),
            _ => return Err(self.error("expected '0', '1', or a variable")),
        };
        for &v in &vars {
            match rhs {
                Rhs::Constant(c) => builder.set_constant(v, c ^ negated)?,
                Rhs::Var(w) => builder.tie(v, w, negated)?,
            }
        }
        Ok(())
    }

    fn variable(&mut self) -> Result<usize> {
        if self.peek() != Some(b'x') {
            return Err(self.error("expected a variable like 'x3'"));
        }
        self.pos += 1;
        let digits_start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == digits_start {
            return Err(self.error("expected digits after 'x'"));
        }
        let text = std::str::from_utf8(&self.src[digits_start..self.pos]).unwrap();
        let index: usize = text.parse().map_err(|_| Error::Parse {
            position: digits_start,
            message: "variable index too large".into(),
        })?;
        if index >= self.n {
            return Err(Error::IndexOutOfRange { index, n: self.n });
        }
        Ok(index)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected {:?}", c as char)))
        }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek_at(&self, offset: usize) -> Option<u8> {
        self.src.get(self.pos + offset).copied()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn error(&self, message: &str) -> Error {
        Error::Parse {
            position: self.pos,
            message: message.into(),
        }
    }
}

// ---------------------------------------------------------------------------
// bit vector expression parser

enum BitvecToken {
    Free,
    Constant(bool),
    Reference {
        target: usize,
        negated: bool,
        pos: usize,
    },
}

fn tokenize_bitvec_expr(expr: &str) -> Result<Vec<BitvecToken>> {
    let src = expr.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < src.len() {
        match src[pos] {
            b'*' => {
                tokens.push(BitvecToken::Free);
                pos += 1;
            }
            b'0' => {
                tokens.push(BitvecToken::Constant(false));
                pos += 1;
            }
            b'1' => {
                tokens.push(BitvecToken::Constant(true));
                pos += 1;
            }
            b'[' => {
                let start = pos;
                pos += 1;
                let negated = src.get(pos) == Some(&b'!');
                if negated {
                    pos += 1;
                }
                let digits_start = pos;
                while matches!(src.get(pos), Some(c) if c.is_ascii_digit()) {
                    pos += 1;
                }
                if pos == digits_start || src.get(pos) != Some(&b']') {
                    return Err(Error::Parse {
                        position: start,
                        message: "malformed bracket reference".into(),
                    });
                }
                let text = std::str::from_utf8(&src[digits_start..pos]).unwrap();
                let target: usize = text.parse().map_err(|_| Error::Parse {
                    position: digits_start,
                    message: "reference index too large".into(),
                })?;
                pos += 1;
                tokens.push(BitvecToken::Reference {
                    target,
                    negated,
                    pos: start,
                });
            }
            c => {
                return Err(Error::Parse {
                    position: pos,
                    message: format!("unexpected character {:?}", c as char),
                });
            }
        }
    }
    if tokens.is_empty() {
        return Err(Error::Parse {
            position: 0,
            message: "empty bit vector expression".into(),
        });
    }
    Ok(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitvec::BitVector;

    fn bits(s: &str) -> BitVector {
        BitVector::from_string(s).unwrap()
    }

    #[test]
    fn expr_free_counts() {
        let pa = PartialAssignment::parse_expr("x1=0; x5=!x4", 16).unwrap();
        assert_eq!(pa.free_count(), 14);

        let pa =
            PartialAssignment::parse_expr("x0, x3 = 0; x7 = 1; x12 = x8; x13 != x9", 16).unwrap();
        assert_eq!(pa.free_count(), 11);
        let matches = pa.enumerate_matches().unwrap().count();
        assert_eq!(matches, 1 << 11);
    }

    #[test]
    fn expr_conflicts() {
        match PartialAssignment::parse_expr("x1=0; x1=1", 4) {
            Err(Error::Conflict { a, b }) => assert_eq!((a, b), (1, 1)),
            other => panic!("expected conflict, got {other:?}"),
        }
        assert!(matches!(
            PartialAssignment::parse_expr("x2 != x2", 4),
            Err(Error::Conflict { .. })
        ));
        // conflict through a chain
        assert!(matches!(
            PartialAssignment::parse_expr("x0 = x1; x1 = x2; x2 != x0", 4),
            Err(Error::Conflict { .. })
        ));
    }

    #[test]
    fn expr_syntax_errors() {
        assert!(matches!(
            PartialAssignment::parse_expr("x1 == 0", 4),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            PartialAssignment::parse_expr("y1 = 0", 4),
            Err(Error::Parse { position: 0, .. })
        ));
        assert!(matches!(
            PartialAssignment::parse_expr("x = 0", 4),
            Err(Error::Parse { position: 1, .. })
        ));
        assert!(matches!(
            PartialAssignment::parse_expr("x9 = 0", 4),
            Err(Error::IndexOutOfRange { index: 9, n: 4 })
        ));
        // empty input is the identity
        assert!(PartialAssignment::parse_expr("  ", 5).unwrap().is_identity());
    }

    #[test]
    fn negated_constant_forms() {
        let a = PartialAssignment::parse_expr("x0 != 0", 2).unwrap();
        let b = PartialAssignment::parse_expr("x0 = 1", 2).unwrap();
        assert_eq!(a, b);
        let c = PartialAssignment::parse_expr("x0 =! 1", 2).unwrap();
        let d = PartialAssignment::parse_expr("x0 = 0", 2).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn bitvec_expr_structure() {
        let pa = PartialAssignment::parse_bitvec_expr("**00**[1]*1[!4]1").unwrap();
        assert_eq!(pa.n(), 11);
        assert_eq!(pa.free_representatives(), &[0, 1, 4, 5, 7]);
        // x6 = x1, x9 = !x4, x2 = x3 = 0, x8 = x10 = 1
        let full = pa.expand(&bits("01011")).unwrap();
        assert_eq!(full.to_string(), "01000111111");

        let free = PartialAssignment::parse_bitvec_expr("*").unwrap();
        assert_eq!((free.n(), free.free_count()), (1, 1));
    }

    #[test]
    fn bitvec_expr_errors() {
        assert!(matches!(
            PartialAssignment::parse_bitvec_expr("[!0]"),
            Err(Error::Conflict { a: 0, b: 0 })
        ));
        assert!(matches!(
            PartialAssignment::parse_bitvec_expr("*[2]"),
            Err(Error::IndexOutOfRange { index: 2, n: 2 })
        ));
        assert!(matches!(
            PartialAssignment::parse_bitvec_expr("*[x]"),
            Err(Error::Parse { position: 1, .. })
        ));
        assert!(matches!(
            PartialAssignment::parse_bitvec_expr("01[3"),
            Err(Error::Parse { .. })
        ));
        assert!(PartialAssignment::parse_bitvec_expr("").is_err());
        // self-reference without negation is a no-op
        assert!(PartialAssignment::parse_bitvec_expr("[0]*").is_ok());
    }

    #[test]
    fn from_pairs_basics() {
        let pa = PartialAssignment::from_pairs(&[(0, true), (1, true), (5, false)], 10).unwrap();
        assert_eq!(pa.free_count(), 7);
        assert!(PartialAssignment::from_pairs(&[], 5).unwrap().is_identity());
        assert!(matches!(
            PartialAssignment::from_pairs(&[(7, true)], 4),
            Err(Error::IndexOutOfRange { index: 7, n: 4 })
        ));
    }

    #[test]
    fn apply_collects_terms() {
        // Q00=1, Q01=2, Q02=-1, Q11=1, Q12=3, Q22=-2; clamp x1 = 1
        let q = QuboInstance::from_matrix(&[
            vec![1.0, 2.0, -1.0],
            vec![0.0, 1.0, 3.0],
            vec![0.0, 0.0, -2.0],
        ])
        .unwrap();
        let pa = PartialAssignment::parse_expr("x1 = 1", 3).unwrap();
        let (reduced, constant) = pa.apply(&q).unwrap();
        assert_eq!(reduced.n(), 2);
        assert_eq!(constant, 1.0);
        assert_eq!(reduced.weight(0, 0), 3.0);
        assert_eq!(reduced.weight(1, 1), 1.0);
        assert_eq!(reduced.weight(0, 1), -1.0);
    }

    #[test]
    fn apply_negated_tie() {
        let q = QuboInstance::from_matrix(&[vec![1.0, 5.0], vec![0.0, 2.0]]).unwrap();
        let pa = PartialAssignment::parse_expr("x1 = !x0", 2).unwrap();
        let (reduced, constant) = pa.apply(&q).unwrap();
        assert_eq!(reduced.n(), 1);
        assert_eq!(constant, 2.0);
        assert_eq!(reduced.weight(0, 0), -1.0);
    }

    #[test]
    fn apply_identity_is_noop() {
        let q = QuboInstance::from_matrix(&[vec![1.0, 5.0], vec![0.0, 2.0]]).unwrap();
        let pa = PartialAssignment::identity(2);
        let (reduced, constant) = pa.apply(&q).unwrap();
        assert_eq!(reduced, q);
        assert_eq!(constant, 0.0);
        assert_eq!(pa.expand(&bits("10")).unwrap(), bits("10"));
    }

    #[test]
    fn energy_identity_over_reduced_space() {
        use crate::instance::WeightDistribution;
        for seed in 0..10u64 {
            let n = 6 + (seed % 4) as usize;
            let q = QuboInstance::random(n, WeightDistribution::Normal, 0.8, seed).unwrap();
            let pa = PartialAssignment::parse_expr("x0 = 1; x2 = !x1", n).unwrap();
            let (reduced, constant) = pa.apply(&q).unwrap();
            for k in 0..(1u64 << reduced.n()) {
                let y = BitVector::from_index(k, reduced.n());
                let full = pa.expand(&y).unwrap();
                let lhs = q.energy(&full).unwrap();
                let rhs = reduced.energy(&y).unwrap() + constant;
                assert!((lhs - rhs).abs() < 1e-9, "seed {seed} k {k}");
            }
        }
    }

    #[test]
    fn enumerate_small_patterns() {
        let pa = PartialAssignment::identity(2);
        assert_eq!(pa.enumerate_matches().unwrap().count(), 4);

        let pa = PartialAssignment::parse_expr("x0 = 1", 2).unwrap();
        let got: Vec<String> = pa
            .enumerate_matches()
            .unwrap()
            .map(|v| v.to_string())
            .collect();
        assert_eq!(got, vec!["10", "11"]);

        let pa = PartialAssignment::parse_expr("x1 = !x0", 2).unwrap();
        let got: Vec<String> = pa
            .enumerate_matches()
            .unwrap()
            .map(|v| v.to_string())
            .collect();
        assert_eq!(got, vec!["01", "10"]);
    }

    #[test]
    fn enumeration_respects_the_cap() {
        let pa = PartialAssignment::identity(8);
        assert!(matches!(
            pa.enumerate_matches_capped(6),
            Err(Error::ResourceCap { n: 8, cap: 6, .. })
        ));
        assert_eq!(pa.enumerate_matches_capped(8).unwrap().count(), 256);
    }

    #[test]
    fn canonical_string_shape() {
        let pa =
            PartialAssignment::parse_expr("x5, x8 = 0; x0, x3 = 1; x7 != x1", 9).unwrap();
        assert_eq!(
            pa.to_canonical_string(),
            "x5, x8 = 0; x0, x3 = 1; x7 != x1"
        );
        assert_eq!(PartialAssignment::identity(4).to_canonical_string(), "");
    }

    #[test]
    fn canonical_round_trip() {
        let exprs = [
            "x0 = x1; x2 = !x1; x3 = 0",
            "x4 != x0; x1 = 1; x2 = x0",
            "x0, x1, x2 = x3",
        ];
        for expr in exprs {
            let pa = PartialAssignment::parse_expr(expr, 5).unwrap();
            let canon = pa.to_canonical_string();
            let back = PartialAssignment::parse_expr(&canon, 5).unwrap();
            assert_eq!(pa, back, "round trip failed for {expr:?} -> {canon:?}");
        }
    }

    #[test]
    fn conflict_detection_is_complete() {
        // arbitrary (possibly cyclic) constraint sets are rejected exactly
        // when no vector satisfies them
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for trial in 0..300 {
            let n = rng.random_range(2..=8usize);
            #[derive(Clone, Copy)]
            enum Rhs {
                Const(bool),
                Var(usize, bool),
            }
            let raw: Vec<(usize, Rhs)> = (0..rng.random_range(1..=8))
                .map(|_| {
                    let a = rng.random_range(0..n);
                    let rhs = if rng.random::<bool>() {
                        Rhs::Const(rng.random())
                    } else {
                        Rhs::Var(rng.random_range(0..n), rng.random())
                    };
                    (a, rhs)
                })
                .collect();
            let expr = raw
                .iter()
                .map(|&(a, rhs)| match rhs {
                    Rhs::Const(c) => format!("x{a} = {}", c as u8),
                    Rhs::Var(b, false) => format!("x{a} = x{b}"),
                    Rhs::Var(b, true) => format!("x{a} != x{b}"),
                })
                .collect::<Vec<_>>()
                .join("; ");
            let satisfiable = (0..(1u64 << n)).any(|k| {
                raw.iter().all(|&(a, rhs)| {
                    let xa = (k >> a) & 1 == 1;
                    match rhs {
                        Rhs::Const(c) => xa == c,
                        Rhs::Var(b, neg) => xa == (((k >> b) & 1 == 1) ^ neg),
                    }
                })
            });
            match PartialAssignment::parse_expr(&expr, n) {
                Ok(_) => assert!(satisfiable, "trial {trial}: accepted {expr:?} unsatisfiable"),
                Err(Error::Conflict { .. }) => {
                    assert!(!satisfiable, "trial {trial}: rejected satisfiable {expr:?}")
                }
                Err(other) => panic!("trial {trial}: unexpected error {other:?}"),
            }
        }
    }

    #[test]
    fn matches_agrees_with_enumeration() {
        let pa = PartialAssignment::parse_expr("x0 = x2; x1 = 1", 4).unwrap();
        let listed: Vec<BitVector> = pa.enumerate_matches().unwrap().collect();
        let mut filtered: Vec<BitVector> = (0..16u64)
            .map(|k| BitVector::from_index(k, 4))
            .filter(|x| pa.matches(x).unwrap())
            .collect();
        let mut sorted = listed.clone();
        sorted.sort();
        filtered.sort();
        assert_eq!(sorted, filtered);
        assert_eq!(listed.len(), 4);
    }
}
