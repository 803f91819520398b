use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// Signed generator index: generator `index` in `1..=4` raised to `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Letter {
    pub index: u8,
    pub inverse: bool,
}

impl Letter {
    pub fn new(index: u8, exponent: i8) -> Letter {
        assert!((1..=4).contains(&index), "generator index {index} out of range");
        assert!(exponent == 1 || exponent == -1, "exponent must be +-1");
        Letter { index, inverse: exponent < 0 }
    }

    pub fn exponent(self) -> i8 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    pub fn inv(self) -> Letter {
        Letter { index: self.index, inverse: !self.inverse }
    }

    /// Position in the order `+1, -1, +2, -2, ...`; used for shortlex.
    fn rank(self) -> u8 {
        2 * (self.index - 1) + self.inverse as u8
    }
}

impl Ord for Letter {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank())
    }
}

impl PartialOrd for Letter {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Freely reduced word in the generators `a1, b1, a2, b2` (indices 1..4).
///
/// Text form: letters as `+i` / `-i` joined by `-`, so `a1 b2^-1 b1`
/// prints as `+1--4-+2`. The empty word prints as the empty string.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    /// Builds a word from `(index, exponent)` pairs and reduces it.
    pub fn from_pairs(pairs: &[(u8, i8)]) -> Word {
        Word::reduced(pairs.iter().map(|&(i, e)| Letter::new(i, e)))
    }

    pub fn reduced(letters: impl IntoIterator<Item = Letter>) -> Word {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            if out.last() == Some(&l.inv()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inv())
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inv()).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word::reduced(self.0.iter().chain(other.0.iter()).copied())
    }

    /// `self * w * self^-1`.
    pub fn conjugate(&self, w: &Word) -> Word {
        self.concat(w).concat(&self.inverse())
    }

    pub fn pow(&self, k: u32) -> Word {
        (0..k).fold(Word::empty(), |acc, _| acc.concat(self))
    }

    /// Signed letter counts per generator (image in Z^4).
    pub fn abelianization(&self) -> [i64; 4] {
        let mut v = [0i64; 4];
        for l in &self.0 {
            v[(l.index - 1) as usize] += l.exponent() as i64;
        }
        v
    }
}

impl Ord for Word {
    /// Shortlex order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, l) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("-")?;
            }
            write!(f, "{}{}", if l.inverse { '-' } else { '+' }, l.index)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Word, Error> {
        let bytes = s.as_bytes();
        let mut letters = Vec::new();
        let mut pos = 0;
        while pos < bytes.len() {
            if !letters.is_empty() {
                if bytes[pos] != b'-' {
                    return Err(Error::Parse(format!("expected '-' separator at {pos} in {s:?}")));
                }
                pos += 1;
            }
            let sign = match bytes.get(pos) {
                Some(b'+') => 1,
                Some(b'-') => -1,
                _ => return Err(Error::Parse(format!("expected sign at {pos} in {s:?}"))),
            };
            pos += 1;
            let start = pos;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let index: u8 = s[start..pos]
                .parse()
                .map_err(|_| Error::Parse(format!("bad generator index in {s:?}")))?;
            if !(1..=4).contains(&index) {
                return Err(Error::Parse(format!("generator index {index} out of range in {s:?}")));
            }
            letters.push(Letter::new(index, sign));
        }
        let w = Word(letters);
        if !w.is_reduced() {
            return Err(Error::Parse(format!("word {s:?} is not freely reduced")));
        }
        Ok(w)
    }
}
