//! Vehicle type catalog.
//!
//! Seven types with different acceleration, braking, following and length
//! profiles. Demand files reference types by name.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleType {
    pub name: &'static str,
    /// Maximum acceleration, m/s².
    pub max_accel: f64,
    /// Comfortable deceleration, m/s².
    pub max_decel: f64,
    /// Hard braking limit, m/s².
    pub emergency_decel: f64,
    /// Vehicle length, m.
    pub length: f64,
    /// Standstill gap to the leader, m.
    pub min_gap: f64,
    /// Driver reaction headway, s.
    pub reaction: f64,
    /// Multiplier applied to lane speed limits.
    pub speed_factor: f64,
}

impl VehicleType {
    pub fn is_valid(&self) -> bool {
        let positive = [
            self.max_accel,
            self.max_decel,
            self.emergency_decel,
            self.length,
            self.min_gap,
            self.reaction,
            self.speed_factor,
        ]
        .iter()
        .all(|v| *v > 0.0 && v.is_finite());
        positive
            && self.emergency_decel >= self.max_decel
            && (0.5..=1.5).contains(&self.speed_factor)
    }
}

const CATALOG: [VehicleType; 7] = [
    VehicleType {
        name: "compact",
        max_accel: 2.6,
        max_decel: 4.5,
        emergency_decel: 9.0,
        length: 3.5,
        min_gap: 2.0,
        reaction: 1.0,
        speed_factor: 1.05,
    },
    VehicleType {
        name: "sedan",
        max_accel: 2.3,
        max_decel: 4.5,
        emergency_decel: 9.0,
        length: 4.5,
        min_gap: 2.5,
        reaction: 1.0,
        speed_factor: 1.0,
    },
    VehicleType {
        name: "suv",
        max_accel: 2.0,
        max_decel: 4.2,
        emergency_decel: 8.5,
        length: 5.0,
        min_gap: 2.5,
        reaction: 1.0,
        speed_factor: 0.97,
    },
    VehicleType {
        name: "sport",
        max_accel: 2.6,
        max_decel: 4.5,
        emergency_decel: 9.0,
        length: 4.3,
        min_gap: 2.0,
        reaction: 0.9,
        speed_factor: 1.1,
    },
    VehicleType {
        name: "van",
        max_accel: 1.6,
        max_decel: 4.0,
        emergency_decel: 8.0,
        length: 6.0,
        min_gap: 2.5,
        reaction: 1.1,
        speed_factor: 0.95,
    },
    VehicleType {
        name: "truck",
        max_accel: 1.1,
        max_decel: 3.5,
        emergency_decel: 7.0,
        length: 10.0,
        min_gap: 3.0,
        reaction: 1.2,
        speed_factor: 0.9,
    },
    VehicleType {
        name: "bus",
        max_accel: 1.0,
        max_decel: 3.5,
        emergency_decel: 7.0,
        length: 12.0,
        min_gap: 3.0,
        reaction: 1.2,
        speed_factor: 0.85,
    },
];

pub fn catalog() -> &'static [VehicleType] {
    &CATALOG
}

pub fn by_name(name: &str) -> Option<usize> {
    CATALOG.iter().position(|t| t.name == name)
}
