//! Centeredness, hard instances, the averaging lemma and bound certification.

mod centered;
mod certify;
mod instances;
mod lemma;

pub use centered::{centeredness_all, centeredness_lp, most_centered_index, CenterednessCertificate, SignVectorSet};
pub use certify::{certify_tpr_lower, BoundMode, Certification, CERTIFY_TOLERANCE};
pub use instances::{golden_hard_instance, hard_instance_from_center, iid_hard_instance};
pub use lemma::{lemma_1e_check, lemma_1e_f, LemmaCheck, ONE_MINUS_INV_E};
