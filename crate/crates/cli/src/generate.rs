//! Named problem generators, parsed from `class:arg,arg,...` strings.

use std::fmt;
use std::str::FromStr;

use structeig_core::builders::{
    block_companion, companion, random_matrix_poly, random_unitary_plus_rank_k, unitary_diag_plus_rank_k, ScalarPoly,
    TestPoly,
};
use structeig_core::representation::ProblemInput;
use structeig_core::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Class {
    /// Haar unitary plus Gaussian rank-`k`.
    RandomUnitary,
    /// Random unit-modulus diagonal plus Gaussian rank-`k`.
    UnitaryDiag,
    /// Block companion of a random monic matrix polynomial with `k x k`
    /// blocks and degree `n / k`.
    MatrixPoly,
}

impl Class {
    pub const ALL: [Class; 3] = [Class::RandomUnitary, Class::UnitaryDiag, Class::MatrixPoly];

    pub fn name(self) -> &'static str {
        match self {
            Class::RandomUnitary => "random-unitary",
            Class::UnitaryDiag => "unitary-diag",
            Class::MatrixPoly => "matrix-poly",
        }
    }

    /// Problem of size `n` with rank `k`. For matrix polynomials `norm` is
    /// the Frobenius norm of each coefficient and `k` must divide `n`.
    pub fn build(self, n: usize, k: usize, norm: f64, seed: u64) -> Result<ProblemInput> {
        match self {
            Class::RandomUnitary => random_unitary_plus_rank_k(n, k, norm, seed),
            Class::UnitaryDiag => unitary_diag_plus_rank_k(n, k, norm, seed),
            Class::MatrixPoly => {
                if k == 0 || n % k != 0 {
                    return Err(structeig_core::Error::Dimension(format!(
                        "matrix-poly needs k | n, got n = {n}, k = {k}"
                    )));
                }
                block_companion(&random_matrix_poly(k, n / k, norm, seed)?)
            }
        }
    }
}

impl FromStr for Class {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Class::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown class {s:?}; expected one of random-unitary, unitary-diag, matrix-poly"))
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A generated problem.
#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    /// `random-unitary:n,k,norm,seed`, `unitary-diag:...` or
    /// `matrix-poly:n,k,norm,seed`.
    Random { class: Class, n: usize, k: usize, norm: f64, seed: u64 },
    /// `poly:name,size` from the scalar test suite.
    Poly { which: TestPoly, size: usize },
}

impl Generator {
    /// The problem, and the scalar polynomial when there is one.
    pub fn build(&self) -> Result<(ProblemInput, Option<ScalarPoly>)> {
        match *self {
            Generator::Random { class, n, k, norm, seed } => Ok((class.build(n, k, norm, seed)?, None)),
            Generator::Poly { which, size } => {
                let p = which.poly(size);
                Ok((companion(&p)?, Some(p)))
            }
        }
    }
}

fn field<T: FromStr>(what: &str, s: &str) -> std::result::Result<T, String> {
    s.trim().parse().map_err(|_| format!("cannot parse {what} from {s:?}"))
}

impl FromStr for Generator {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (head, args) = s.split_once(':').ok_or_else(|| format!("expected class:args, got {s:?}"))?;
        let args: Vec<&str> = args.split(',').collect();
        if head == "poly" {
            if args.len() != 2 {
                return Err(String::from("poly takes name,size"));
            }
            let which =
                TestPoly::from_name(args[0].trim()).ok_or_else(|| format!("unknown polynomial {:?}", args[0]))?;
            return Ok(Generator::Poly { which, size: field("size", args[1])? });
        }
        let class: Class = head.parse()?;
        if args.len() != 4 {
            return Err(format!("{head} takes n,k,norm,seed"));
        }
        Ok(Generator::Random {
            class,
            n: field("n", args[0])?,
            k: field("k", args[1])?,
            norm: field("norm", args[2])?,
            seed: field("seed", args[3])?,
        })
    }
}
