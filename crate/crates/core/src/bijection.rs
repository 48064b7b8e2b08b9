//! Bijections of the index set that equal the identity outside a finite
//! window, with the sup-displacement distance
//! ρ(F,G) = sup_x d(F(x), G(x)).
//!
//! Windowed bijections form a group under composition; ρ to the identity is
//! subadditive under composition, so they are all locally bounded.

use alloc::vec::Vec;

use crate::space::Window;

/// A permutation of X equal to the identity outside `window`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bijection {
    window: Option<Window>,
    /// image[i] = F(window.lo + i); a permutation of the window points.
    image: Vec<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BijectionError {
    NotAPermutation,
}

impl core::fmt::Display for BijectionError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "image table is not a permutation of the window")
    }
}

impl Bijection {
    pub fn identity() -> Self {
        Bijection { window: None, image: Vec::new() }
    }

    /// Build from the image table on a window; images must permute the window.
    pub fn from_images(window: Window, image: Vec<i64>) -> Result<Self, BijectionError> {
        if image.len() != window.len() {
            return Err(BijectionError::NotAPermutation);
        }
        let mut seen = alloc::vec![false; window.len()];
        for &y in &image {
            if !window.contains(y) {
                return Err(BijectionError::NotAPermutation);
            }
            let k = window.offset(y);
            if seen[k] {
                return Err(BijectionError::NotAPermutation);
            }
            seen[k] = true;
        }
        Ok(Bijection { window: Some(window), image })
    }

    /// The transposition a ↔ b.
    pub fn transposition(a: i64, b: i64) -> Self {
        assert_ne!(a, b);
        let w = Window::new(a.min(b), a.max(b));
        let image = w
            .iter()
            .map(|x| if x == a { b } else if x == b { a } else { x })
            .collect();
        Bijection { window: Some(w), image }
    }

    /// The cycle p_0 → p_1 → ... → p_{k-1} → p_0 (identity elsewhere).
    pub fn from_cycle(points: &[i64]) -> Result<Self, BijectionError> {
        let lo = *points.iter().min().ok_or(BijectionError::NotAPermutation)?;
        let hi = *points.iter().max().ok_or(BijectionError::NotAPermutation)?;
        let w = Window::new(lo, hi);
        let mut image: Vec<i64> = w.iter().collect();
        for (i, &p) in points.iter().enumerate() {
            let target = points[(i + 1) % points.len()];
            image[w.offset(p)] = target;
        }
        Self::from_images(w, image)
    }

    /// The support window, `None` for the identity.
    pub fn support(&self) -> Option<Window> {
        self.window
    }

    pub fn is_identity(&self) -> bool {
        match self.window {
            None => true,
            Some(w) => w.iter().all(|x| self.eval(x) == x),
        }
    }

    pub fn eval(&self, x: i64) -> i64 {
        match self.window {
            Some(w) if w.contains(x) => self.image[w.offset(x)],
            _ => x,
        }
    }

    pub fn inverse(&self) -> Bijection {
        match self.window {
            None => Bijection::identity(),
            Some(w) => {
                let mut image = alloc::vec![0i64; w.len()];
                for x in w.iter() {
                    image[w.offset(self.eval(x))] = x;
                }
                Bijection { window: Some(w), image }
            }
        }
    }

    /// self ∘ other: x ↦ self(other(x)).
    pub fn compose(&self, other: &Bijection) -> Bijection {
        let w = match (self.window, other.window) {
            (None, None) => return Bijection::identity(),
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (Some(a), Some(b)) => a.union(b),
        };
        let image = w.iter().map(|x| self.eval(other.eval(x))).collect();
        Bijection { window: Some(w), image }
    }

    /// ρ(F, I) = sup_x |F(x) - x|; finite and attained on the support.
    pub fn rho_to_identity(&self) -> i64 {
        match self.window {
            None => 0,
            Some(w) => w.iter().map(|x| (self.eval(x) - x).abs()).max().unwrap_or(0),
        }
    }
}

/// ρ(F, G) = sup_x |F(x) - G(x)|, attained on the union of supports.
pub fn rho(f: &Bijection, g: &Bijection) -> i64 {
    let w = match (f.support(), g.support()) {
        (None, None) => return 0,
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (Some(a), Some(b)) => a.union(b),
    };
    w.iter().map(|x| (f.eval(x) - g.eval(x)).abs()).max().unwrap_or(0)
}
