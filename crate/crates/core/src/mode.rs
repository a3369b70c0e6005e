//! Hardware state: virtualization mode plus privilege encoding, and the
//! address-space regions each mode owns.

use std::fmt;

/// Two-bit privilege encoding as carried in the trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Privilege {
    User = 0b00,
    Supervisor = 0b01,
    Machine = 0b11,
}

impl Privilege {
    pub fn bits(self) -> u8 {
        self as u8
    }

    pub fn from_bits(bits: u8) -> Option<Self> {
        match bits {
            0b00 => Some(Privilege::User),
            0b01 => Some(Privilege::Supervisor),
            0b11 => Some(Privilege::Machine),
            _ => None,
        }
    }
}

/// Virtualization bit plus privilege. Only the five combinations defined
/// by the hypervisor extension are constructible.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct HartMode {
    v: bool,
    prv: Privilege,
}

impl HartMode {
    pub const U: HartMode = HartMode { v: false, prv: Privilege::User };
    pub const VU: HartMode = HartMode { v: true, prv: Privilege::User };
    pub const VS: HartMode = HartMode { v: true, prv: Privilege::Supervisor };
    pub const HS: HartMode = HartMode { v: false, prv: Privilege::Supervisor };
    pub const M: HartMode = HartMode { v: false, prv: Privilege::Machine };

    pub const ALL: [HartMode; 5] = [Self::U, Self::VU, Self::VS, Self::HS, Self::M];

    /// Returns `None` for the illegal (v=1, prv=M) combination.
    pub fn new(v: bool, prv: Privilege) -> Option<Self> {
        if v && prv == Privilege::Machine {
            None
        } else {
            Some(HartMode { v, prv })
        }
    }

    pub fn virtualized(self) -> bool {
        self.v
    }

    pub fn privilege(self) -> Privilege {
        self.prv
    }

    /// Rank in the privilege ordering U/VU < VS < HS < M.
    pub fn level(self) -> u8 {
        match (self.v, self.prv) {
            (_, Privilege::User) => 0,
            (true, Privilege::Supervisor) => 1,
            (false, Privilege::Supervisor) => 2,
            (_, Privilege::Machine) => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match (self.v, self.prv) {
            (false, Privilege::User) => "U",
            (true, Privilege::User) => "VU",
            (true, Privilege::Supervisor) => "VS",
            (false, Privilege::Supervisor) => "HS",
            (_, Privilege::Machine) => "M",
        }
    }

    /// The address-space region this mode's code and data live in.
    pub fn region(self) -> Region {
        match self.level() {
            0 => Region::User,
            1 => Region::GuestKernel,
            2 => Region::Hypervisor,
            _ => Region::Machine,
        }
    }
}

impl fmt::Debug for HartMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl fmt::Display for HartMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One quarter of the 32-bit address space. U and VU share `User`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    User,
    GuestKernel,
    Hypervisor,
    Machine,
}

impl Region {
    pub const ALL: [Region; 4] = [Region::User, Region::GuestKernel, Region::Hypervisor, Region::Machine];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Short lowercase key used in config files and manifests.
    pub fn key(self) -> &'static str {
        match self {
            Region::User => "u",
            Region::GuestKernel => "vs",
            Region::Hypervisor => "hs",
            Region::Machine => "m",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Region::User => "U/VU",
            Region::GuestKernel => "VS",
            Region::Hypervisor => "HS",
            Region::Machine => "M",
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_five_legal_modes() {
        let mut legal = 0;
        for v in [false, true] {
            for prv in [Privilege::User, Privilege::Supervisor, Privilege::Machine] {
                if HartMode::new(v, prv).is_some() {
                    legal += 1;
                }
            }
        }
        assert_eq!(legal, 5);
        assert_eq!(Privilege::from_bits(0b10), None);
    }

    #[test]
    fn levels_order_modes() {
        assert!(HartMode::VU.level() < HartMode::VS.level());
        assert!(HartMode::VS.level() < HartMode::HS.level());
        assert!(HartMode::HS.level() < HartMode::M.level());
        assert_eq!(HartMode::U.region(), HartMode::VU.region());
    }
}
