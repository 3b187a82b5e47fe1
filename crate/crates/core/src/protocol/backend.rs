use serde::{Deserialize, Serialize};

use super::{ProtocolError, RejectReason};
use crate::air::Circuit;
use crate::commit::{tag, Digest, HashKind};

/// Public statement a step proof is bound to, already hashed by the caller.
pub type PublicDigest = Digest;

/// What the mock backend publishes for one constraint grid.
///
/// `grid` commits to every witness cell, `constraints` to the layout and
/// constraint system, and `seal` binds both to the public statement. None of
/// this hides the witness: the grid digest is binding only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepProof {
    pub rows: usize,
    pub cols: usize,
    pub grid: Digest,
    pub constraints: Digest,
    pub seal: Digest,
}

/// Shape and constraint-set digest a verifier expects for a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Structure {
    pub rows: usize,
    pub cols: usize,
    pub digest: Digest,
}

pub trait ProofBackend: Sync {
    fn name(&self) -> &'static str;
    fn prove_step(&self, circuit: &Circuit, public: &PublicDigest) -> Result<StepProof, ProtocolError>;
    /// Checks a proof against the structure digest the verifier re-derived
    /// from public information.
    fn verify_step(&self, proof: &StepProof, structure: &Structure, public: &PublicDigest) -> Result<(), RejectReason>;
}

/// Constraint-checking stand-in for a SNARK prover.
#[derive(Clone, Copy, Debug, Default)]
pub struct MockBackend {
    pub hash: HashKind,
}

impl MockBackend {
    pub const NAME: &'static str = "mock";

    pub fn new(hash: HashKind) -> Self {
        Self { hash }
    }

    pub fn structure(&self, circuit: &Circuit) -> Structure {
        Structure {
            rows: circuit.grid.rows(),
            cols: circuit.grid.cols(),
            digest: self.hash.hash(tag::CONSTRAINTS, &[&circuit.structure_bytes()]),
        }
    }

    pub fn grid_digest(&self, circuit: &Circuit) -> Digest {
        let mut h = self.hash.hasher(tag::GRID);
        circuit.write_witness(&mut |b| h.update(b));
        h.finish()
    }

    fn seal(&self, grid: &Digest, constraints: &Digest, public: &PublicDigest) -> Digest {
        self.hash.hash(tag::PUBLIC, &[&grid.0, &constraints.0, &public.0])
    }

    /// Full re-check when the witness is at hand: the grid must hash to
    /// the proof's digest and satisfy every constraint.
    pub fn verify_with_witness(
        &self,
        proof: &StepProof,
        circuit: &Circuit,
        public: &PublicDigest,
    ) -> Result<(), RejectReason> {
        self.verify_step(proof, &self.structure(circuit), public)?;
        if self.grid_digest(circuit) != proof.grid {
            return Err(RejectReason::WitnessMismatch);
        }
        let report = circuit.check().map_err(|e| RejectReason::Unsatisfied(e.to_string()))?;
        if !report.is_empty() {
            return Err(RejectReason::Unsatisfied(format!("{} violation(s)", report.len())));
        }
        Ok(())
    }
}

impl ProofBackend for MockBackend {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn prove_step(&self, circuit: &Circuit, public: &PublicDigest) -> Result<StepProof, ProtocolError> {
        let report = circuit.check()?;
        if !report.is_empty() {
            return Err(ProtocolError::Unsatisfied(report.to_string()));
        }
        let grid = self.grid_digest(circuit);
        let s = self.structure(circuit);
        Ok(StepProof { rows: s.rows, cols: s.cols, grid, constraints: s.digest, seal: self.seal(&grid, &s.digest, public) })
    }

    fn verify_step(&self, proof: &StepProof, structure: &Structure, public: &PublicDigest) -> Result<(), RejectReason> {
        if proof.rows != structure.rows || proof.cols != structure.cols || proof.constraints != structure.digest {
            return Err(RejectReason::Structure);
        }
        if proof.seal != self.seal(&proof.grid, &proof.constraints, public) {
            return Err(RejectReason::StepProofMismatch);
        }
        Ok(())
    }
}
