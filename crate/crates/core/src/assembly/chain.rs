use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// A letter of the alphabet, i.e. an element type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(transparent)]
pub struct Element(String);

impl Element {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(|c| c.is_whitespace() || c == '@' || c == ':') {
            return Err(Error::invalid(format!("invalid element id {id:?}")));
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Letters with a flag for the assembly subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Alphabet {
    letters: Vec<(Element, bool)>,
}

impl Alphabet {
    pub fn new(letters: Vec<(Element, bool)>) -> Result<Self> {
        for (i, (e, _)) in letters.iter().enumerate() {
            if letters[..i].iter().any(|(other, _)| other == e) {
                return Err(Error::invalid(format!("duplicate letter {e}")));
            }
        }
        if !letters.iter().any(|(_, assembly)| *assembly) {
            return Err(Error::invalid("the assembly subset of the alphabet is empty"));
        }
        Ok(Self { letters })
    }

    pub fn contains(&self, e: &Element) -> bool {
        self.letters.iter().any(|(x, _)| x == e)
    }

    pub fn is_assembly(&self, e: &Element) -> bool {
        self.letters.iter().any(|(x, a)| x == e && *a)
    }

    pub fn letters(&self) -> impl Iterator<Item = (&Element, bool)> {
        self.letters.iter().map(|(e, a)| (e, *a))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Unit {
    pub element: Element,
    /// Relative coordinates, carried as payload.
    pub position: [f64; 3],
}

impl Unit {
    pub fn new(element: Element, position: [f64; 3]) -> Self {
        Self { element, position }
    }

    pub fn at_origin(element: Element) -> Self {
        Self::new(element, [0.0; 3])
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Chain {
    units: Vec<Unit>,
}

impl Chain {
    pub fn new(units: Vec<Unit>) -> Self {
        Self { units }
    }

    pub fn from_letters<'a>(letters: impl IntoIterator<Item = &'a str>) -> Result<Self> {
        letters
            .into_iter()
            .map(|l| Element::new(l).map(Unit::at_origin))
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Element at 1-based position.
    pub fn element(&self, position: usize) -> Option<&Element> {
        position
            .checked_sub(1)
            .and_then(|i| self.units.get(i))
            .map(|u| &u.element)
    }

    pub fn letters(&self) -> Vec<Element> {
        self.units.iter().map(|u| u.element.clone()).collect()
    }

    pub fn same_letters(&self, other: &Chain) -> bool {
        self.units.len() == other.units.len()
            && self
                .units
                .iter()
                .zip(&other.units)
                .all(|(a, b)| a.element == b.element)
    }

    pub(crate) fn push(&mut self, unit: Unit) {
        self.units.push(unit);
    }

    pub fn validate(&self, alphabet: &Alphabet) -> Result<()> {
        match self.units.iter().find(|u| !alphabet.contains(&u.element)) {
            Some(u) => Err(Error::invalid(format!("element {} is not in the alphabet", u.element))),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, u) in self.units.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}", u.element)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BondKind {
    Covalent,
    Hydrogen,
}

impl BondKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BondKind::Covalent => "covalent",
            BondKind::Hydrogen => "hydrogen",
        }
    }
}

impl fmt::Display for BondKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for BondKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "covalent" => Ok(BondKind::Covalent),
            "hydrogen" => Ok(BondKind::Hydrogen),
            other => Err(Error::invalid(format!("unknown bond kind {other:?}"))),
        }
    }
}

/// A bond between a coding-chain unit and a growing-chain unit (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BondDescriptor {
    pub kind: BondKind,
    pub coding_position: usize,
    pub growing_position: usize,
}

/// Coding chain, growing chain, alignment `s` and bonds `l_1..l_k`.
///
/// Bond `l_j` joins coding position `s - j + 1` with growing position
/// `m - j + 1`, where `m` is the growing chain length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActiveSystem {
    coding: Chain,
    growing: Chain,
    alignment: usize,
    bonds: Vec<BondDescriptor>,
}

impl ActiveSystem {
    /// `bond_kinds[0]` is the terminal bond `l_1`.
    pub fn new(coding: Chain, growing: Chain, alignment: usize, bond_kinds: &[BondKind]) -> Result<Self> {
        let k = bond_kinds.len();
        if k == 0 {
            return Err(Error::invalid("an active system needs at least one bond"));
        }
        if alignment > coding.len() {
            return Err(Error::invalid(format!(
                "alignment {alignment} beyond coding chain of length {}",
                coding.len()
            )));
        }
        if alignment < k || growing.len() < k {
            return Err(Error::invalid(format!(
                "{k} bonds need alignment and growing length of at least {k}"
            )));
        }
        let m = growing.len();
        let bonds = bond_kinds
            .iter()
            .enumerate()
            .map(|(i, &kind)| BondDescriptor {
                kind,
                coding_position: alignment - i,
                growing_position: m - i,
            })
            .collect();
        Ok(Self {
            coding,
            growing,
            alignment,
            bonds,
        })
    }

    pub fn coding(&self) -> &Chain {
        &self.coding
    }

    pub fn growing(&self) -> &Chain {
        &self.growing
    }

    pub fn alignment(&self) -> usize {
        self.alignment
    }

    pub fn bonds(&self) -> &[BondDescriptor] {
        &self.bonds
    }

    pub fn terminal_bond(&self) -> BondKind {
        self.bonds[0].kind
    }

    /// Element `A_s` at the alignment position.
    pub fn coding_element(&self) -> &Element {
        self.coding
            .element(self.alignment)
            .expect("alignment is within the coding chain")
    }

    /// Last element `B_m` of the growing chain.
    pub fn growing_element(&self) -> &Element {
        &self.growing.units.last().expect("growing chain is nonempty").element
    }

    /// Whether another unit can still be aligned against the coding chain.
    pub fn can_extend(&self) -> bool {
        self.alignment < self.coding.len()
    }

    pub(crate) fn extended(&self, unit: Unit, bond_to_coding: BondKind) -> Result<Self> {
        if !self.can_extend() {
            return Err(Error::invalid("coding chain exhausted"));
        }
        let mut next = self.clone();
        next.growing.push(unit);
        next.alignment += 1;
        next.bonds.insert(
            0,
            BondDescriptor {
                kind: bond_to_coding,
                coding_position: next.alignment,
                growing_position: next.growing.len(),
            },
        );
        Ok(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Element {
        Element::new(s).unwrap()
    }

    #[test]
    fn alphabet_rules() {
        assert!(Alphabet::new(vec![(e("A"), true), (e("A"), false)]).is_err());
        assert!(Alphabet::new(vec![(e("A"), false)]).is_err());
        let a = Alphabet::new(vec![(e("A"), true), (e("W"), false)]).unwrap();
        assert!(a.is_assembly(&e("A")));
        assert!(a.contains(&e("W")) && !a.is_assembly(&e("W")));
    }

    #[test]
    fn element_ids_are_tokens() {
        assert!(Element::new("").is_err());
        assert!(Element::new("a b").is_err());
        assert!(Element::new("dA").is_ok());
    }

    #[test]
    fn bond_positions_follow_alignment() {
        let coding = Chain::from_letters(["A", "B", "C", "D"]).unwrap();
        let growing = Chain::from_letters(["x", "y"]).unwrap();
        let s = ActiveSystem::new(coding, growing, 3, &[BondKind::Hydrogen, BondKind::Covalent]).unwrap();
        assert_eq!(s.bonds()[0].coding_position, 3);
        assert_eq!(s.bonds()[0].growing_position, 2);
        assert_eq!(s.bonds()[1].coding_position, 2);
        assert_eq!(s.bonds()[1].growing_position, 1);
        assert_eq!(s.coding_element(), &e("C"));
        assert_eq!(s.growing_element(), &e("y"));
    }

    #[test]
    fn active_system_rejects_bad_shapes() {
        let coding = Chain::from_letters(["A", "B"]).unwrap();
        let growing = Chain::from_letters(["x"]).unwrap();
        assert!(ActiveSystem::new(coding.clone(), growing.clone(), 1, &[]).is_err());
        assert!(ActiveSystem::new(coding.clone(), growing.clone(), 3, &[BondKind::Covalent]).is_err());
        assert!(ActiveSystem::new(
            coding,
            growing,
            2,
            &[BondKind::Covalent, BondKind::Covalent]
        )
        .is_err());
    }
}
