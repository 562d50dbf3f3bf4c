#ifndef TSDF_TESTS_FIXTURES_HPP
#define TSDF_TESTS_FIXTURES_HPP

#include <filesystem>
#include <string>

// Three reference datasets used across the test suites: a two-file
// recording with a difference-encoded time file, a flat single-file audio
// recording with uniform sampling, and a two-session hierarchical recording
// whose four files carry their own in-file time channels.
//
// Every fixture is internally consistent: timestamps are valid ISO 8601,
// the audio end timestamp sits 30 seconds (1323000 samples at 44100 Hz)
// after its start, and each session's span matches its file row counts.

namespace fixtures {

const std::string& fig1_metadata();
const std::string& audio_metadata();
const std::string& hierarchical_metadata();

/// Write metadata plus consistent binaries; returns the metadata path.
std::filesystem::path make_fig1_dataset(const std::filesystem::path& dir);
std::filesystem::path make_audio_dataset(const std::filesystem::path& dir);
std::filesystem::path make_hierarchical_dataset(const std::filesystem::path& dir);

/// Fresh empty directory under the system temp root.
std::filesystem::path temp_dir(const std::string& name);

} // namespace fixtures

#endif
