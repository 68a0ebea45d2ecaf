//! General MIDI Level 1 program names.
//!
//! Each program lists its GM1 name in identifier form first, followed by
//! common aliases (mostly the upper-case names used by Java MIDI tools, which
//! is where names like `ELECTRIC_JAZZ_GUITAR` come from). Lookup ignores case
//! and treats `_` and space alike.

use crate::spec::normalize_instrument;

/// `(program, names)`; program numbers are 0-based.
pub const PROGRAMS: [(u8, &[&str]); 128] = [
    (
        0,
        &[
            "Acoustic_Grand_Piano",
            "Piano",
            "Acoustic_Grand",
            "Grand_Piano",
        ],
    ),
    (1, &["Bright_Acoustic_Piano", "Bright_Acoustic"]),
    (2, &["Electric_Grand_Piano", "Electric_Grand"]),
    (3, &["Honky_tonk_Piano", "Honkey_Tonk", "Honky_Tonk"]),
    (4, &["Electric_Piano_1", "Electric_Piano", "Rhodes_Piano"]),
    (
        5,
        &["Electric_Piano_2", "Electric_Piano2", "Chorused_Piano"],
    ),
    (6, &["Harpsichord"]),
    (7, &["Clavi", "Clavinet"]),
    (8, &["Celesta"]),
    (9, &["Glockenspiel"]),
    (10, &["Music_Box"]),
    (11, &["Vibraphone"]),
    (12, &["Marimba"]),
    (13, &["Xylophone"]),
    (14, &["Tubular_Bells"]),
    (15, &["Dulcimer"]),
    (16, &["Drawbar_Organ", "Hammond_Organ"]),
    (17, &["Percussive_Organ"]),
    (18, &["Rock_Organ"]),
    (19, &["Church_Organ"]),
    (20, &["Reed_Organ"]),
    (21, &["Accordion", "Accordian"]),
    (22, &["Harmonica"]),
    (23, &["Tango_Accordion", "Tango_Accordian"]),
    (
        24,
        &["Acoustic_Guitar_Nylon", "Guitar", "Nylon_String_Guitar"],
    ),
    (25, &["Acoustic_Guitar_Steel", "Steel_String_Guitar"]),
    (26, &["Electric_Guitar_Jazz", "Electric_Jazz_Guitar"]),
    (27, &["Electric_Guitar_Clean", "Electric_Clean_Guitar"]),
    (28, &["Electric_Guitar_Muted", "Electric_Muted_Guitar"]),
    (29, &["Overdriven_Guitar"]),
    (30, &["Distortion_Guitar"]),
    (31, &["Guitar_Harmonics"]),
    (32, &["Acoustic_Bass"]),
    (
        33,
        &["Electric_Bass_Finger", "Electric_Bass", "Fingered_Bass"],
    ),
    (34, &["Electric_Bass_Pick", "Picked_Bass"]),
    (35, &["Fretless_Bass"]),
    (36, &["Slap_Bass_1"]),
    (37, &["Slap_Bass_2"]),
    (38, &["Synth_Bass_1"]),
    (39, &["Synth_Bass_2"]),
    (40, &["Violin"]),
    (41, &["Viola"]),
    (42, &["Cello"]),
    (43, &["Contrabass"]),
    (44, &["Tremolo_Strings"]),
    (45, &["Pizzicato_Strings"]),
    (46, &["Orchestral_Harp", "Orchestral_Strings", "Harp"]),
    (47, &["Timpani"]),
    (48, &["String_Ensemble_1", "Strings", "String_Ensemble"]),
    (49, &["String_Ensemble_2", "Slow_Strings"]),
    (50, &["Synth_Strings_1", "Synth_Strings", "Synthstrings_1"]),
    (51, &["Synth_Strings_2", "Synthstrings_2"]),
    (52, &["Choir_Aahs", "Choir"]),
    (53, &["Voice_Oohs"]),
    (54, &["Synth_Voice"]),
    (55, &["Orchestra_Hit"]),
    (56, &["Trumpet"]),
    (57, &["Trombone"]),
    (58, &["Tuba"]),
    (59, &["Muted_Trumpet"]),
    (60, &["French_Horn"]),
    (61, &["Brass_Section", "Brass"]),
    (62, &["Synth_Brass_1", "Synthbrass_1"]),
    (63, &["Synth_Brass_2", "Synthbrass_2"]),
    (64, &["Soprano_Sax"]),
    (65, &["Alto_Sax"]),
    (66, &["Tenor_Sax"]),
    (67, &["Baritone_Sax"]),
    (68, &["Oboe"]),
    (69, &["English_Horn"]),
    (70, &["Bassoon"]),
    (71, &["Clarinet"]),
    (72, &["Piccolo"]),
    (73, &["Flute"]),
    (74, &["Recorder"]),
    (75, &["Pan_Flute"]),
    (76, &["Blown_Bottle"]),
    (77, &["Shakuhachi", "Skakuhachi"]),
    (78, &["Whistle"]),
    (79, &["Ocarina"]),
    (80, &["Lead_1_Square", "Square", "Lead_Square"]),
    (81, &["Lead_2_Sawtooth", "Sawtooth", "Lead_Sawtooth"]),
    (82, &["Lead_3_Calliope", "Calliope", "Lead_Calliope"]),
    (83, &["Lead_4_Chiff", "Chiff", "Lead_Chiff"]),
    (84, &["Lead_5_Charang", "Charang", "Lead_Charang"]),
    (85, &["Lead_6_Voice", "Voice", "Lead_Voice"]),
    (86, &["Lead_7_Fifths", "Fifths", "Lead_Fifths"]),
    (
        87,
        &["Lead_8_Bass_Lead", "Basslead", "Bass_Lead", "Lead_Basslead"],
    ),
    (88, &["Pad_1_New_Age", "New_Age", "Pad_New_Age"]),
    (89, &["Pad_2_Warm", "Warm", "Pad_Warm"]),
    (90, &["Pad_3_Polysynth", "Polysynth", "Pad_Polysynth"]),
    (91, &["Pad_4_Choir", "Pad_Choir", "Space_Voice"]),
    (92, &["Pad_5_Bowed", "Bowed", "Pad_Bowed"]),
    (93, &["Pad_6_Metallic", "Metallic", "Pad_Metallic"]),
    (94, &["Pad_7_Halo", "Halo", "Pad_Halo"]),
    (95, &["Pad_8_Sweep", "Sweep", "Pad_Sweep"]),
    (96, &["FX_1_Rain", "Rain", "FX_Rain", "Ice_Rain"]),
    (97, &["FX_2_Soundtrack", "Soundtrack", "FX_Soundtrack"]),
    (98, &["FX_3_Crystal", "Crystal", "FX_Crystal"]),
    (99, &["FX_4_Atmosphere", "Atmosphere", "FX_Atmosphere"]),
    (100, &["FX_5_Brightness", "Brightness", "FX_Brightness"]),
    (101, &["FX_6_Goblins", "Goblin", "Goblins", "FX_Goblin"]),
    (102, &["FX_7_Echoes", "Echoes", "Echo_Drops", "FX_Echoes"]),
    (103, &["FX_8_Sci_fi", "Sci_fi", "Scifi", "FX_Sci_fi"]),
    (104, &["Sitar"]),
    (105, &["Banjo"]),
    (106, &["Shamisen"]),
    (107, &["Koto"]),
    (108, &["Kalimba"]),
    (109, &["Bag_pipe", "Bagpipe"]),
    (110, &["Fiddle"]),
    (111, &["Shanai"]),
    (112, &["Tinkle_Bell"]),
    (113, &["Agogo"]),
    (114, &["Steel_Drums"]),
    (115, &["Woodblock"]),
    (116, &["Taiko_Drum"]),
    (117, &["Melodic_Tom"]),
    (118, &["Synth_Drum"]),
    (119, &["Reverse_Cymbal"]),
    (120, &["Guitar_Fret_Noise"]),
    (121, &["Breath_Noise"]),
    (122, &["Seashore"]),
    (123, &["Bird_Tweet"]),
    (124, &["Telephone_Ring"]),
    (125, &["Helicopter"]),
    (126, &["Applause"]),
    (127, &["Gunshot"]),
];

/// Looks up the 0-based program number for an instrument name.
pub fn program_for(name: &str) -> Option<u8> {
    let key = normalize_instrument(name);
    PROGRAMS.iter().find_map(|(program, names)| {
        names
            .iter()
            .any(|n| normalize_instrument(n) == key)
            .then_some(*program)
    })
}

/// Primary GM1 name of a program.
pub fn program_name(program: u8) -> Option<&'static str> {
    PROGRAMS.get(program as usize).map(|(_, names)| names[0])
}
