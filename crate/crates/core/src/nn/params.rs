//! Named parameter traversal.
//!
//! Every trainable structure exposes its arrays through [`Parameters`] in a
//! fixed order. Gradients are stored in a second instance of the same type,
//! so accumulation, optimizer updates and checkpointing all walk the same
//! sequence of named arrays.

/// A structure owning named `f64` parameter arrays.
pub trait Parameters {
    /// Calls `f(name, shape, values)` for every array, in a fixed order.
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64]));

    /// Mutable counterpart of [`Parameters::visit`], same order.
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64]));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, _, v| n += v.len());
        n
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit("", &mut |_, _, v| out.extend_from_slice(v));
        out
    }

    /// Overwrites all parameters from a flat buffer produced by `flatten`.
    fn assign_flat(&mut self, flat: &[f64]) {
        let mut offset = 0;
        self.visit_mut("", &mut |_, _, v| {
            v.copy_from_slice(&flat[offset..offset + v.len()]);
            offset += v.len();
        });
        assert_eq!(offset, flat.len(), "flat buffer length mismatch");
    }

    fn zero(&mut self) {
        self.visit_mut("", &mut |_, _, v| v.iter_mut().for_each(|x| *x = 0.0));
    }

    /// `self += other`, elementwise across all arrays.
    fn accumulate(&mut self, other: &Self)
    where
        Self: Sized,
    {
        let flat = other.flatten();
        let mut offset = 0;
        self.visit_mut("", &mut |_, _, v| {
            for (a, b) in v.iter_mut().zip(&flat[offset..]) {
                *a += b;
            }
            offset += v.len();
        });
    }

    /// Clone with every array set to zero, used as a gradient buffer.
    fn zeros_like(&self) -> Self
    where
        Self: Sized + Clone,
    {
        let mut out = self.clone();
        out.zero();
        out
    }

    fn is_finite(&self) -> bool {
        let mut ok = true;
        self.visit("", &mut |_, _, v| ok &= v.iter().all(|x| x.is_finite()));
        ok
    }
}

/// Joins a parameter path segment onto a prefix.
pub fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

impl<P: Parameters> Parameters for Option<P> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        if let Some(p) = self {
            p.visit(prefix, f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        if let Some(p) = self {
            p.visit_mut(prefix, f);
        }
    }
}

impl<P: Parameters> Parameters for Vec<P> {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        for (i, p) in self.iter().enumerate() {
            p.visit(&join(prefix, &i.to_string()), f);
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        for (i, p) in self.iter_mut().enumerate() {
            p.visit_mut(&join(prefix, &i.to_string()), f);
        }
    }
}
