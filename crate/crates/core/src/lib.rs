//! Braille ASCII processing toolkit.
//!
//! * [`braille`]: cell model, Braille ASCII codec, validation, dot perturbation
//! * [`kb`]: fragment knowledge bases and attribute inventory
//! * [`tokenizer`]: KB-driven fragment segmentation and word segmentation
//! * [`bkft`]: vocabulary extension and prior-driven embedding initialization
//! * [`augment`]: syntax-span replacement and baseline augmenters
//! * [`metrics`]: BLEU, chrF++, CER and TER
//! * [`dataset`]: normalization, validation, templates and rule-based transcription
//! * [`toy`]: a small position-wise model that exercises the initialization end to end

pub mod augment;
pub mod bkft;
pub mod braille;
pub mod dataset;
pub mod edit;
pub mod kb;
pub mod metrics;
pub mod rng;
pub mod seed;
pub mod tokenizer;
pub mod toy;
