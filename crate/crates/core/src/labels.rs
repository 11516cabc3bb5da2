//! The six abnormality classes and the fixed-order label vector.

use serde::{Deserialize, Serialize};

/// Classes in their fixed vector order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EcgClass {
    /// First-degree atrioventricular block (1dAVb).
    FirstDegreeAvBlock,
    /// Right bundle branch block (RBBB).
    RightBundleBranchBlock,
    /// Left bundle branch block (LBBB).
    LeftBundleBranchBlock,
    /// Sinus bradycardia (SB).
    SinusBradycardia,
    /// Atrial fibrillation (AF).
    AtrialFibrillation,
    /// Sinus tachycardia (ST).
    SinusTachycardia,
}

pub const N_CLASSES: usize = 6;

/// All classes in vector order.
pub const CLASSES: [EcgClass; N_CLASSES] = [
    EcgClass::FirstDegreeAvBlock,
    EcgClass::RightBundleBranchBlock,
    EcgClass::LeftBundleBranchBlock,
    EcgClass::SinusBradycardia,
    EcgClass::AtrialFibrillation,
    EcgClass::SinusTachycardia,
];

impl EcgClass {
    pub fn index(self) -> usize {
        match self {
            EcgClass::FirstDegreeAvBlock => 0,
            EcgClass::RightBundleBranchBlock => 1,
            EcgClass::LeftBundleBranchBlock => 2,
            EcgClass::SinusBradycardia => 3,
            EcgClass::AtrialFibrillation => 4,
            EcgClass::SinusTachycardia => 5,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        CLASSES.get(i).copied()
    }

    /// Canonical short name used in file headers and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            EcgClass::FirstDegreeAvBlock => "1dAVb",
            EcgClass::RightBundleBranchBlock => "RBBB",
            EcgClass::LeftBundleBranchBlock => "LBBB",
            EcgClass::SinusBradycardia => "SB",
            EcgClass::AtrialFibrillation => "AF",
            EcgClass::SinusTachycardia => "ST",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        CLASSES.iter().copied().find(|c| c.as_str() == s)
    }
}

impl std::fmt::Display for EcgClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Six booleans in fixed order (1dAVb, RBBB, LBBB, SB, AF, ST).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct LabelVector(pub [bool; N_CLASSES]);

impl LabelVector {
    pub fn all_false() -> Self {
        LabelVector([false; N_CLASSES])
    }

    pub fn get(&self, class: EcgClass) -> bool {
        self.0[class.index()]
    }

    pub fn set(&mut self, class: EcgClass, value: bool) {
        self.0[class.index()] = value;
    }

    pub fn with(mut self, class: EcgClass, value: bool) -> Self {
        self.set(class, value);
        self
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&b| b)
    }

    /// 0.0/1.0 targets in vector order.
    pub fn as_f32(&self) -> [f32; N_CLASSES] {
        let mut out = [0.0; N_CLASSES];
        for (o, &b) in out.iter_mut().zip(&self.0) {
            *o = if b { 1.0 } else { 0.0 };
        }
        out
    }
}
