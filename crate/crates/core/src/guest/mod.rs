//! Bundled guest software: the search and sort user programs, the guest
//! OS and native OS trap handlers, and the hypervisor.

use std::fmt;
use std::str::FromStr;

use crate::asm::{assemble, AsmError, CodeBlob};
use crate::functional::Boot;
use crate::image::{compose_image, ImageError, Layout, MemoryImage, PageTableSet, Placement, RegionMap};
use crate::mode::Region;

const SEARCH_SRC: &str = include_str!("../../guest/search.s");
const SORT_SRC: &str = include_str!("../../guest/sort.s");
const PRINT_UINT_SRC: &str = include_str!("../../guest/print_uint.s");
const OS_NATIVE_SRC: &str = include_str!("../../guest/os_native.s");
const OS_GUEST_SRC: &str = include_str!("../../guest/os_guest.s");
const HYPERVISOR_SRC: &str = include_str!("../../guest/hypervisor.s");

pub const DEFAULT_SEARCH_ARRAY: [u32; 16] = [3, 7, 11, 19, 23, 31, 42, 57, 64, 71, 88, 93, 105, 117, 128, 140];
pub const DEFAULT_SEARCH_KEY: u32 = 105;
pub const DEFAULT_SORT_ARRAY: [u32; 16] = [93, 5, 42, 17, 8, 64, 1, 250, 33, 71, 12, 99, 4, 56, 27, 180];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FixtureName {
    Search,
    Sort,
}

impl FixtureName {
    pub const ALL: [FixtureName; 2] = [FixtureName::Search, FixtureName::Sort];

    pub fn as_str(self) -> &'static str {
        match self {
            FixtureName::Search => "search",
            FixtureName::Sort => "sort",
        }
    }
}

impl fmt::Display for FixtureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FixtureName {
    type Err = GuestError;

    fn from_str(s: &str) -> Result<Self, GuestError> {
        match s {
            "search" => Ok(FixtureName::Search),
            "sort" => Ok(FixtureName::Sort),
            other => Err(GuestError::UnknownFixture(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GuestError {
    #[error("unknown fixture `{0}` (expected search or sort)")]
    UnknownFixture(String),
    #[error("{part}: {source}")]
    Asm { part: &'static str, source: AsmError },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("fixture input must not be empty")]
    EmptyInput,
}

/// A fixture with its inputs and oracle output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub name: FixtureName,
    pub inputs: Vec<u32>,
    pub key: Option<u32>,
    pub expected_console: Vec<u8>,
}

impl Fixture {
    pub fn search(inputs: &[u32], key: u32) -> Fixture {
        let expected = match inputs.iter().position(|&x| x == key) {
            Some(i) => format!("index={i}\n"),
            None => "not found\n".to_owned(),
        };
        Fixture {
            name: FixtureName::Search,
            inputs: inputs.to_vec(),
            key: Some(key),
            expected_console: expected.into_bytes(),
        }
    }

    pub fn sort(inputs: &[u32]) -> Fixture {
        let mut sorted: Vec<i32> = inputs.iter().map(|&x| x as i32).collect();
        sorted.sort();
        let text: Vec<String> = sorted.iter().map(|&x| (x as u32).to_string()).collect();
        let expected = format!("{}\n", text.join(" "));
        Fixture { name: FixtureName::Sort, inputs: inputs.to_vec(), key: None, expected_console: expected.into_bytes() }
    }

    pub fn default_for(name: FixtureName) -> Fixture {
        match name {
            FixtureName::Search => Fixture::search(&DEFAULT_SEARCH_ARRAY, DEFAULT_SEARCH_KEY),
            FixtureName::Sort => Fixture::sort(&DEFAULT_SORT_ARRAY),
        }
    }

    /// User program source with inputs and addresses filled in.
    pub fn user_source(&self, layout: &Layout) -> String {
        let user = layout.areas(Region::User);
        let words: Vec<String> = self.inputs.iter().map(|w| format!("{w:#x}")).collect();
        let template = match self.name {
            FixtureName::Search => SEARCH_SRC,
            FixtureName::Sort => SORT_SRC,
        };
        template
            .replace("{{PRINT_UINT}}", PRINT_UINT_SRC)
            .replace("{{ARRAY}}", &words.join(", "))
            .replace("{{LEN}}", &self.inputs.len().to_string())
            .replace("{{KEY}}", &format!("{:#x}", self.key.unwrap_or(0)))
            .replace("{{DATA}}", &format!("{:#x}", user.data.base + 0x1000))
            .replace("{{BUF}}", &format!("{:#x}", user.data.base))
    }
}

/// Handler sources for each region, keyed by whether the system is
/// virtualized.
pub fn handler_sources(virtualized: bool, layout: &Layout) -> Vec<(Region, String)> {
    let console = format!("{:#x}", layout.console);
    if virtualized {
        vec![
            (Region::GuestKernel, OS_GUEST_SRC.to_owned()),
            (Region::Hypervisor, HYPERVISOR_SRC.replace("{{CONSOLE}}", &console)),
        ]
    } else {
        vec![(Region::Hypervisor, OS_NATIVE_SRC.replace("{{CONSOLE}}", &console))]
    }
}

/// Trap-vector values and the code origin of each region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vectors {
    pub vstvec: u32,
    pub stvec: u32,
    pub mtvec: u32,
}

impl Default for Vectors {
    /// Handler entries staggered so that user code, guest OS and hypervisor
    /// occupy disjoint I-cache and I-TLB sets.
    fn default() -> Self {
        Vectors { vstvec: 0x4000_1000, stvec: 0x8000_2000, mtvec: 0xC000_3000 }
    }
}

impl Vectors {
    /// Vectors at the first word of each region's code area.
    pub fn at_code_bases(layout: &Layout) -> Self {
        Vectors {
            vstvec: layout.areas(Region::GuestKernel).code.base,
            stvec: layout.areas(Region::Hypervisor).code.base,
            mtvec: layout.areas(Region::Machine).code.base,
        }
    }

    pub fn origin(&self, region: Region, layout: &Layout) -> u32 {
        match region {
            Region::User => layout.areas(Region::User).code.base,
            Region::GuestKernel => self.vstvec,
            Region::Hypervisor => self.stvec,
            Region::Machine => self.mtvec,
        }
    }
}

/// Assembled program ready to run.
#[derive(Debug, Clone)]
pub struct BuiltProgram {
    pub image: MemoryImage,
    pub boot: Boot,
    pub blobs: Vec<(Region, CodeBlob)>,
}

fn asm(part: &'static str, src: &str, origin: u32) -> Result<CodeBlob, GuestError> {
    assemble(src, origin).map_err(|source| GuestError::Asm { part, source })
}

/// Assembles and places a fixture: user code in the user region, plus the
/// guest OS and hypervisor (virtualized) or the native OS in HS.
pub fn build_fixture(
    fixture: &Fixture,
    virtualized: bool,
    tables: PageTableSet,
    layout: &Layout,
    vectors: Vectors,
) -> Result<BuiltProgram, GuestError> {
    if fixture.inputs.is_empty() {
        return Err(GuestError::EmptyInput);
    }
    let user = asm("user program", &fixture.user_source(layout), vectors.origin(Region::User, layout))?;
    let mut blobs = vec![(Region::User, user)];
    for (region, src) in handler_sources(virtualized, layout) {
        let part = if region == Region::GuestKernel {
            "guest OS"
        } else if virtualized {
            "hypervisor"
        } else {
            "OS"
        };
        blobs.push((region, asm(part, &src, vectors.origin(region, layout))?));
    }
    let placements: Vec<Placement> = blobs.iter().map(|(r, b)| Placement::code(*r, b)).collect();
    let image = compose_image(&placements, tables, layout)?;
    let boot = Boot {
        virtualized,
        entry: blobs[0].1.base,
        vstvec: vectors.vstvec,
        stvec: vectors.stvec,
        mtvec: vectors.mtvec,
    };
    Ok(BuiltProgram { image, boot, blobs })
}

/// Convenience wrapper using the default region map, layout and tables.
pub fn build_default(fixture: &Fixture, virtualized: bool) -> Result<BuiltProgram, GuestError> {
    let layout = Layout::default();
    let tables = crate::image::default_tables(&RegionMap::default(), &layout)?;
    build_fixture(fixture, virtualized, tables, &layout, Vectors::default())
}

/// A directional check on a non-virtualized vs virtualized pair of runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Property {
    MoreInstructions,
    MoreCycles,
    LowerCpi,
}

impl Property {
    pub fn describe(self) -> &'static str {
        match self {
            Property::MoreInstructions => "instret_V > instret_N",
            Property::MoreCycles => "cycles_V > cycles_N",
            Property::LowerCpi => "CPI_V < CPI_N",
        }
    }

    pub fn holds(self, n: &crate::stats::Stats, v: &crate::stats::Stats) -> bool {
        match self {
            Property::MoreInstructions => v.instret > n.instret,
            Property::MoreCycles => v.cycles > n.cycles,
            Property::LowerCpi => v.cpi < n.cpi,
        }
    }
}

pub fn expected_properties(_name: FixtureName) -> [Property; 3] {
    [Property::MoreInstructions, Property::MoreCycles, Property::LowerCpi]
}
