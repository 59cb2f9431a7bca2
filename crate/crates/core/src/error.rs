use std::fmt;

/// Domain errors, identified by stable machine-readable names.
///
/// The CLI prints `name()` on stderr and exits with status 1, so tests and
/// scripts can match on the exact strings below.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Error {
    /// Operands belong to different ring contexts.
    ContextMismatch,
    /// Inversion of an element divisible by p.
    NonUnit,
    /// A rational with p in its denominator after cancellation.
    BadPrime,
    /// Square root of a quadratic nonresidue.
    NotASquare,
    /// Square root (or residue test) of an element divisible by p.
    ZeroResidue,
    /// Series reversion on a series without lowest exponent 1 and an
    /// invertible leading coefficient.
    NotReversible,
    /// Point fails the curve equation.
    NotOnCurve,
    /// Both addition laws returned a non-unimodular triple; unreachable for
    /// good-reduction curves and signals an internal invariant violation.
    InternalNonUnimodular,
    /// Exhaustive-scan guard exceeded.
    TooLarge,
    /// Hensel lift from a singular reduced point.
    NoLift,
    /// Exponential map applied to a unit (valuation 0).
    BadValuation,
    /// Logarithm of a point outside the kernel of reduction.
    NotInKernel,
    /// Edwards addition denominator is not a unit; signals a violation of
    /// the nonresidue-d invariant.
    NonUnitDenominator,
    /// Divisor reduction on a divisor of nonzero degree.
    NonzeroDegree,
    /// x1 and (1 - d) lie in different quadratic classes mod p.
    ClassMismatch,
    /// Edwards parameter d is a square mod p.
    DSquare,
    /// beta applied to a point on an exceptional fiber (abscissa -x1 or an
    /// affine 2-torsion point other than (0,0)); such points do not exist
    /// when d is a nonresidue.
    ExceptionalFiber,
    /// The reduced curve order is divisible by p; the reduction sequence
    /// does not split.
    Anomalous,
    /// A projective coordinate triple with no unit coordinate.
    NotUnimodular,
    /// Invalid ring context parameters (p not an odd prime >= 5, or k = 0).
    BadContext,
    /// Curve discriminant is not a unit.
    SingularCurve,
    /// Malformed textual input.
    ParseError,
}

impl Error {
    /// Stable machine-readable error name.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ContextMismatch => "ContextMismatch",
            Error::NonUnit => "NonUnit",
            Error::BadPrime => "BadPrime",
            Error::NotASquare => "NotASquare",
            Error::ZeroResidue => "ZeroResidue",
            Error::NotReversible => "NotReversible",
            Error::NotOnCurve => "NotOnCurve",
            Error::InternalNonUnimodular => "InternalNonUnimodular",
            Error::TooLarge => "TooLarge",
            Error::NoLift => "NoLift",
            Error::BadValuation => "BadValuation",
            Error::NotInKernel => "NotInKernel",
            Error::NonUnitDenominator => "NonUnitDenominator",
            Error::NonzeroDegree => "NonzeroDegree",
            Error::ClassMismatch => "ClassMismatch",
            Error::DSquare => "DSquare",
            Error::ExceptionalFiber => "ExceptionalFiber",
            Error::Anomalous => "Anomalous",
            Error::NotUnimodular => "NotUnimodular",
            Error::BadContext => "BadContext",
            Error::SingularCurve => "SingularCurve",
            Error::ParseError => "ParseError",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::error::Error for Error {}
