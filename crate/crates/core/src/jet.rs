//! Truncated Taylor arithmetic in one variable.
//!
//! A [`Jet`] holds the normalized Taylor coefficients `f^(k)(r)/k!` for
//! `k < ORDER`. Closed-form metric profiles are written once as ordinary
//! expressions over jets, and every derivative the curvature formulas need
//! falls out exactly (up to rounding) without finite differences.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub const ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub c: [f64; ORDER],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut c = [0.0; ORDER];
        c[0] = v;
        Jet { c }
    }

    /// The independent variable evaluated at `r`.
    pub fn var(r: f64) -> Self {
        let mut c = [0.0; ORDER];
        c[0] = r;
        c[1] = 1.0;
        Jet { c }
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// k-th derivative. Only the first `ORDER - 1 - (number of
    /// differentiations applied)` entries are meaningful.
    pub fn d(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.c[k] * fact
    }

    pub fn d1(&self) -> f64 {
        self.d(1)
    }

    pub fn d2(&self) -> f64 {
        self.d(2)
    }

    /// Derivative as a jet; the top coefficient is lost (set to zero).
    pub fn derivative(&self) -> Self {
        let mut c = [0.0; ORDER];
        for k in 0..ORDER - 1 {
            c[k] = (k + 1) as f64 * self.c[k + 1];
        }
        Jet { c }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut c = self.c;
        c.iter_mut().for_each(|x| *x *= s);
        Jet { c }
    }

    pub fn recip(&self) -> Self {
        Jet::constant(1.0) / *self
    }

    pub fn exp(&self) -> Self {
        let mut e = [0.0; ORDER];
        e[0] = self.c[0].exp();
        for k in 1..ORDER {
            let s: f64 = (1..=k).map(|j| j as f64 * self.c[j] * e[k - j]).sum();
            e[k] = s / k as f64;
        }
        Jet { c: e }
    }

    pub fn ln(&self) -> Self {
        let a = &self.c;
        let mut l = [0.0; ORDER];
        l[0] = a[0].ln();
        for k in 1..ORDER {
            let s: f64 = (1..k).map(|j| j as f64 * l[j] * a[k - j]).sum();
            l[k] = (a[k] - s / k as f64) / a[0];
        }
        Jet { c: l }
    }

    pub fn powf(&self, p: f64) -> Self {
        let a = &self.c;
        let mut y = [0.0; ORDER];
        y[0] = a[0].powf(p);
        for k in 1..ORDER {
            let s: f64 = (1..=k)
                .map(|j| (p * j as f64 - (k - j) as f64) * a[j] * y[k - j])
                .sum();
            y[k] = s / (k as f64 * a[0]);
        }
        Jet { c: y }
    }

    pub fn powi(&self, p: i32) -> Self {
        match p {
            0 => Jet::constant(1.0),
            p if p < 0 => self.powi(-p).recip(),
            p => {
                let mut out = *self;
                for _ in 1..p {
                    out = out * *self;
                }
                out
            }
        }
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    fn sinh_cosh(&self) -> (Self, Self) {
        let a = &self.c;
        let mut s = [0.0; ORDER];
        let mut c = [0.0; ORDER];
        s[0] = a[0].sinh();
        c[0] = a[0].cosh();
        for k in 1..ORDER {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                ss += j as f64 * a[j] * c[k - j];
                cc += j as f64 * a[j] * s[k - j];
            }
            s[k] = ss / k as f64;
            c[k] = cc / k as f64;
        }
        (Jet { c: s }, Jet { c })
    }

    pub fn sinh(&self) -> Self {
        self.sinh_cosh().0
    }

    pub fn cosh(&self) -> Self {
        self.sinh_cosh().1
    }

    /// Evaluate a polynomial with coefficients `coeffs[i] * t^i` at this jet.
    pub fn poly(&self, coeffs: &[f64]) -> Self {
        coeffs
            .iter()
            .rev()
            .fold(Jet::constant(0.0), |acc, &a| acc * *self + Jet::constant(a))
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut c = self.c;
        c.iter_mut().zip(o.c).for_each(|(x, y)| *x += y);
        Jet { c }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        let mut c = self.c;
        c.iter_mut().zip(o.c).for_each(|(x, y)| *x -= y);
        Jet { c }
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut c = [0.0; ORDER];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = (0..=k).map(|i| self.c[i] * o.c[k - i]).sum();
        }
        Jet { c }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        let mut c = [0.0; ORDER];
        for k in 0..ORDER {
            let s: f64 = (1..=k).map(|i| o.c[i] * c[k - i]).sum();
            c[k] = (self.c[k] - s) / o.c[0];
        }
        Jet { c }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, o: f64) -> Jet {
        let mut c = self.c;
        c[0] += o;
        Jet { c }
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, o: f64) -> Jet {
        self + (-o)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, o: f64) -> Jet {
        self.scale(o)
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        o + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        -o + self
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        o.scale(self)
    }
}
