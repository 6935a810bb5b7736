//! Where transmitter/receiver channel pairs come from: a synthetic geometric
//! generator or paths imported from a file.
//!
//! Both sources model the same deployment: one fixed transmitter, and a
//! receiver that moves between coherence blocks.

use rand::Rng;

use crate::channel::{
    frequency_channel, synthesize_scenario, ArrayGeometry, ChannelConfig, FrequencyChannel, ImportedChannels,
    PathComponent, Placement, Pulse,
};
use crate::{Error, Result, SimRng};

/// Channels of one coherence block.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkPair {
    /// Identifies the receiver realization (synthetic draw counter or
    /// imported link id).
    pub id: u64,
    pub transmitter: FrequencyChannel,
    pub receiver: FrequencyChannel,
}

pub trait ScenarioSource: Sync {
    fn geometry(&self) -> &ArrayGeometry;

    fn num_subcarriers(&self) -> usize;

    /// Draws the channels of one coherence block. Everything random comes
    /// from `rng`, so a given rng state always yields the same pair.
    fn draw(&self, block: u64, rng: &mut SimRng) -> Result<LinkPair>;
}

/// Fixed synthetic transmitter, fresh synthetic receiver every block.
#[derive(Debug, Clone)]
pub struct SyntheticScenario {
    geometry: ArrayGeometry,
    receiver_config: ChannelConfig,
    num_paths: usize,
    placement: Placement,
    transmitter_paths: Vec<PathComponent>,
    transmitter: FrequencyChannel,
}

impl SyntheticScenario {
    /// Draws the transmitter from `rng`; receivers are drawn later per block.
    pub fn new(
        geometry: ArrayGeometry,
        transmitter_config: ChannelConfig,
        receiver_config: ChannelConfig,
        num_paths: usize,
        placement: Placement,
        rng: &mut SimRng,
    ) -> Result<Self> {
        if transmitter_config.num_subcarriers != receiver_config.num_subcarriers {
            return Err(Error::mismatch(
                "transmitter/receiver subcarriers",
                transmitter_config.num_subcarriers,
                receiver_config.num_subcarriers,
            ));
        }
        let transmitter_paths = synthesize_scenario(rng, &geometry, &transmitter_config, num_paths, placement)?;
        let transmitter = frequency_channel(&transmitter_paths, &transmitter_config, &geometry)?;
        Ok(Self {
            geometry,
            receiver_config,
            num_paths,
            placement,
            transmitter_paths,
            transmitter,
        })
    }

    pub fn transmitter_paths(&self) -> &[PathComponent] {
        &self.transmitter_paths
    }
}

impl ScenarioSource for SyntheticScenario {
    fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    fn num_subcarriers(&self) -> usize {
        self.receiver_config.num_subcarriers
    }

    fn draw(&self, block: u64, rng: &mut SimRng) -> Result<LinkPair> {
        let paths = synthesize_scenario(rng, &self.geometry, &self.receiver_config, self.num_paths, self.placement)?;
        Ok(LinkPair {
            id: block,
            transmitter: self.transmitter.clone(),
            receiver: frequency_channel(&paths, &self.receiver_config, &self.geometry)?,
        })
    }
}

/// Imported paths: one link is the transmitter, every other link is a
/// candidate receiver location picked uniformly per block.
#[derive(Debug, Clone)]
pub struct ImportedScenario {
    geometry: ArrayGeometry,
    num_subcarriers: usize,
    transmitter: FrequencyChannel,
    receivers: Vec<(u64, FrequencyChannel)>,
}

impl ImportedScenario {
    pub fn new(imported: &ImportedChannels, geometry: ArrayGeometry, transmitter_link: u64, pulse: Pulse) -> Result<Self> {
        let config = imported.header.channel_config(pulse);
        let tx_paths = imported
            .links
            .get(&transmitter_link)
            .ok_or_else(|| Error::invalid(format!("transmitter link {transmitter_link} not in file")))?;
        let transmitter = frequency_channel(tx_paths, &config, &geometry)?;
        let receivers = imported
            .links
            .iter()
            .filter(|(id, _)| **id != transmitter_link)
            .map(|(id, paths)| Ok((*id, frequency_channel(paths, &config, &geometry)?)))
            .collect::<Result<Vec<_>>>()?;
        if receivers.is_empty() {
            return Err(Error::invalid("imported file holds no receiver links"));
        }
        Ok(Self {
            geometry,
            num_subcarriers: config.num_subcarriers,
            transmitter,
            receivers,
        })
    }

    pub fn receivers(&self) -> &[(u64, FrequencyChannel)] {
        &self.receivers
    }
}

impl ScenarioSource for ImportedScenario {
    fn geometry(&self) -> &ArrayGeometry {
        &self.geometry
    }

    fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    fn draw(&self, _block: u64, rng: &mut SimRng) -> Result<LinkPair> {
        let (id, receiver) = &self.receivers[rng.random_range(0..self.receivers.len())];
        Ok(LinkPair {
            id: *id,
            transmitter: self.transmitter.clone(),
            receiver: receiver.clone(),
        })
    }
}
