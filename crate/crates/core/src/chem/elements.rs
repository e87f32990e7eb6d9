//! Periodic table data: symbols, standard atomic weights and SMILES default valences.

/// Atomic weight of hydrogen, used for implicit hydrogens.
pub const HYDROGEN_WEIGHT: f64 = 1.0080;

/// Standard atomic weights (g/mol, 4 decimal places). Elements without a
/// stable isotope carry the mass number of their longest-lived isotope.
/// Index 0 is the wildcard `*`, which has no mass.
const TABLE: [(&str, f64); 119] = [
    ("*", 0.0),
    ("H", 1.0080),
    ("He", 4.0026),
    ("Li", 6.9400),
    ("Be", 9.0122),
    ("B", 10.8100),
    ("C", 12.0110),
    ("N", 14.0070),
    ("O", 15.9990),
    ("F", 18.9984),
    ("Ne", 20.1797),
    ("Na", 22.9898),
    ("Mg", 24.3050),
    ("Al", 26.9815),
    ("Si", 28.0850),
    ("P", 30.9738),
    ("S", 32.0600),
    ("Cl", 35.4500),
    ("Ar", 39.9480),
    ("K", 39.0983),
    ("Ca", 40.0780),
    ("Sc", 44.9559),
    ("Ti", 47.8670),
    ("V", 50.9415),
    ("Cr", 51.9961),
    ("Mn", 54.9380),
    ("Fe", 55.8450),
    ("Co", 58.9332),
    ("Ni", 58.6934),
    ("Cu", 63.5460),
    ("Zn", 65.3800),
    ("Ga", 69.7230),
    ("Ge", 72.6300),
    ("As", 74.9216),
    ("Se", 78.9710),
    ("Br", 79.9040),
    ("Kr", 83.7980),
    ("Rb", 85.4678),
    ("Sr", 87.6200),
    ("Y", 88.9058),
    ("Zr", 91.2240),
    ("Nb", 92.9064),
    ("Mo", 95.9500),
    ("Tc", 98.0000),
    ("Ru", 101.0700),
    ("Rh", 102.9055),
    ("Pd", 106.4200),
    ("Ag", 107.8682),
    ("Cd", 112.4140),
    ("In", 114.8180),
    ("Sn", 118.7100),
    ("Sb", 121.7600),
    ("Te", 127.6000),
    ("I", 126.9045),
    ("Xe", 131.2930),
    ("Cs", 132.9055),
    ("Ba", 137.3270),
    ("La", 138.9055),
    ("Ce", 140.1160),
    ("Pr", 140.9077),
    ("Nd", 144.2420),
    ("Pm", 145.0000),
    ("Sm", 150.3600),
    ("Eu", 151.9640),
    ("Gd", 157.2500),
    ("Tb", 158.9254),
    ("Dy", 162.5000),
    ("Ho", 164.9303),
    ("Er", 167.2590),
    ("Tm", 168.9342),
    ("Yb", 173.0450),
    ("Lu", 174.9668),
    ("Hf", 178.4900),
    ("Ta", 180.9479),
    ("W", 183.8400),
    ("Re", 186.2070),
    ("Os", 190.2300),
    ("Ir", 192.2170),
    ("Pt", 195.0840),
    ("Au", 196.9666),
    ("Hg", 200.5920),
    ("Tl", 204.3800),
    ("Pb", 207.2000),
    ("Bi", 208.9804),
    ("Po", 209.0000),
    ("At", 210.0000),
    ("Rn", 222.0000),
    ("Fr", 223.0000),
    ("Ra", 226.0000),
    ("Ac", 227.0000),
    ("Th", 232.0377),
    ("Pa", 231.0359),
    ("U", 238.0289),
    ("Np", 237.0000),
    ("Pu", 244.0000),
    ("Am", 243.0000),
    ("Cm", 247.0000),
    ("Bk", 247.0000),
    ("Cf", 251.0000),
    ("Es", 252.0000),
    ("Fm", 257.0000),
    ("Md", 258.0000),
    ("No", 259.0000),
    ("Lr", 262.0000),
    ("Rf", 267.0000),
    ("Db", 268.0000),
    ("Sg", 269.0000),
    ("Bh", 270.0000),
    ("Hs", 269.0000),
    ("Mt", 278.0000),
    ("Ds", 281.0000),
    ("Rg", 282.0000),
    ("Cn", 285.0000),
    ("Nh", 286.0000),
    ("Fl", 289.0000),
    ("Mc", 290.0000),
    ("Lv", 293.0000),
    ("Ts", 294.0000),
    ("Og", 294.0000),
];

/// A chemical element, identified by atomic number. Atomic number 0 is the
/// `*` wildcard used for polymer attachment points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Element(u8);

impl Element {
    pub const WILDCARD: Element = Element(0);
    pub const HYDROGEN: Element = Element(1);
    pub const BORON: Element = Element(5);
    pub const CARBON: Element = Element(6);
    pub const NITROGEN: Element = Element(7);
    pub const OXYGEN: Element = Element(8);
    pub const FLUORINE: Element = Element(9);
    pub const PHOSPHORUS: Element = Element(15);
    pub const SULFUR: Element = Element(16);
    pub const CHLORINE: Element = Element(17);
    pub const BROMINE: Element = Element(35);
    pub const IODINE: Element = Element(53);

    pub fn from_atomic_number(z: u8) -> Option<Element> {
        ((z as usize) < TABLE.len()).then_some(Element(z))
    }

    /// Look up an element by its capitalised symbol (`"Cl"`, `"Na"`, `"*"`).
    pub fn from_symbol(symbol: &str) -> Option<Element> {
        TABLE.iter().position(|(s, _)| *s == symbol).map(|z| Element(z as u8))
    }

    pub fn atomic_number(self) -> u8 {
        self.0
    }

    pub fn symbol(self) -> &'static str {
        TABLE[self.0 as usize].0
    }

    pub fn atomic_weight(self) -> f64 {
        TABLE[self.0 as usize].1
    }

    pub fn is_wildcard(self) -> bool {
        self.0 == 0
    }

    /// Default valences used to infer implicit hydrogens on organic-subset atoms.
    pub fn default_valences(self) -> &'static [u8] {
        match self.0 {
            5 => &[3],
            6 => &[4],
            7 | 15 => &[3, 5],
            8 => &[2],
            16 => &[2, 4, 6],
            9 | 17 | 35 | 53 => &[1],
            _ => &[],
        }
    }

    /// Elements that may be written outside brackets.
    pub fn in_organic_subset(self) -> bool {
        matches!(self.0, 0 | 5 | 6 | 7 | 8 | 9 | 15 | 16 | 17 | 35 | 53)
    }

    /// Elements that may carry the aromatic (lowercase) form.
    pub fn can_be_aromatic(self) -> bool {
        matches!(self.0, 5 | 6 | 7 | 8 | 15 | 16 | 33 | 34 | 52)
    }
}
