/// Odometer over compositions of `n` into `k` non-negative parts, starting
/// at `(n, 0, …, 0)` and ending at `(0, …, 0, n)`.
#[derive(Clone, Debug)]
pub struct CompositionCursor {
    parts: Vec<u32>,
    done: bool,
}

impl CompositionCursor {
    pub fn new(n: u32, k: usize) -> Self {
        assert!(k >= 1, "at least one part");
        let mut parts = vec![0; k];
        parts[0] = n;
        CompositionCursor { parts, done: false }
    }

    pub fn current(&self) -> Option<&[u32]> {
        (!self.done).then_some(&self.parts[..])
    }

    /// Moves to the next composition; returns `false` once exhausted.
    pub fn advance(&mut self) -> bool {
        let k = self.parts.len();
        if self.done {
            return false;
        }
        let tail = self.parts[k - 1];
        self.parts[k - 1] = 0;
        match (0..k - 1).rev().find(|&i| self.parts[i] > 0) {
            Some(i) => {
                self.parts[i] -= 1;
                self.parts[i + 1] = tail + 1;
                true
            }
            None => {
                self.parts[k - 1] = tail;
                self.done = true;
                false
            }
        }
    }
}

impl Iterator for CompositionCursor {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        let out = self.current()?.to_vec();
        self.advance();
        Some(out)
    }
}

/// `C(n + k - 1, k - 1)` as a float.
pub fn composition_count(n: u32, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 1..k {
        c *= (n as f64 + i as f64) / i as f64;
    }
    c.round()
}
