//! Print the feature map CSV for the default 14-channel layout.

use eegdd_core::dsp::features::feature_map_csv;
use eegdd_core::ChannelLayout;

fn main() {
    print!("{}", feature_map_csv(&ChannelLayout::default()));
}
