#include "fixtures.hpp"

#include <atomic>
#include <fstream>

#include "tsdf/binio.hpp"

namespace fixtures {

namespace fs = std::filesystem;
using namespace tsdf;

const std::string& fig1_metadata() {
    static const std::string text = R"({
   "subject_id": "0713",
   "study_id": "drug513trialphase2",
   "device_id": "serialUID071290123",
   "endianness": "little",
   "metadata_version": "0.1",
   "start_iso8601": "2019-12-19T12:41:45.716+00:00",
   "end_iso8601": "2019-12-19T13:39:33.151+00:00",
   "rows": 4833,
   "samples": [
      {
         "file_name": "sensor_time.bin",
         "channels": ["time"],
         "units": ["s"],
         "compression": "difference",
         "data_type": "float",
         "bits": 32
      },
      {
         "file_name": "sensor_samples.bin",
         "channels": ["pos", "vel", "accl"],
         "units": ["m", "m/s", "m/s/s"],
         "data_type": "int",
         "bits": 16
      }
   ]
}
)";
    return text;
}

const std::string& audio_metadata() {
    static const std::string text = R"({
   "study_id": "voicedata",
   "subject_id": "recruit089",
   "device_id": "audiotechnica02",
   "endianness": "little",
   "metadata_version": "0.1",
   "start_iso8601": "2016-08-09T10:31:00.000+00:00",
   "end_iso8601": "2016-08-09T10:31:30.000+00:00",
   "sampling_rate": 44100,
   "rows": 1323000,
   "channels": ["left", "right"],
   "units": ["unitless", "unitless"],
   "compression": "none",
   "data_type": "int",
   "bits": 16,
   "file_name": "audio_voice_089.raw"
}
)";
    return text;
}

const std::string& hierarchical_metadata() {
    static const std::string text = R"({
   "subject_id": "PD0234",
   "study_id": "homestudy22",
   "device_id": "XBT7456",
   "endianness": "little",
   "metadata_version": "0.1",
   "data_type": "float",
   "bits": 32,
   "multi-day_session": [
      {
         "start_iso8601": "2022-10-26T09:26:45.123+00:00",
         "end_iso8601": "2022-10-26T09:36:52.266+00:00",
         "bits": 32,
         "sensors": [
            {
               "rows": 60714,
               "file_name": "accelerometer_t1.bin",
               "channels": ["time", "magnitude"],
               "units": ["ms", "m/s/s"]
            },
            {
               "rows": 607,
               "file_name": "temperature_t1.bin",
               "channels": ["time", "temperature"],
               "units": ["s", "deg_C"]
            }
         ]
      },
      {
         "start_iso8601": "2022-10-28T10:42:12.465+00:00",
         "end_iso8601": "2022-10-28T13:54:36.578+00:00",
         "sensors": [
            {
               "rows": 1154411,
               "file_name": "accelerometer_t2.bin",
               "channels": ["time", "magnitude"],
               "units": ["ms", "m/s/s"]
            },
            {
               "rows": 11544,
               "file_name": "temperature_t2.bin",
               "channels": ["time", "temperature"],
               "units": ["s", "deg_C"]
            }
         ]
      }
   ]
}
)";
    return text;
}

namespace {

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

/// Two-channel float32 file whose first channel holds elapsed time running
/// exactly from 0 to `span_units` over `rows` samples.
void write_self_timed(const fs::path& path, std::size_t rows, double span_units) {
    BinaryLayout layout;
    layout.data_type = DataType::Float;
    layout.bits = 32;
    layout.endianness = Endianness::Little;
    layout.n_channels = 2;
    layout.rows = rows;

    SampleMatrix m = SampleMatrix::zeros(rows, 2);
    for (std::size_t r = 0; r < rows; ++r) {
        const double t = static_cast<double>(r) * span_units /
                         static_cast<double>(rows > 1 ? rows - 1 : 1);
        m.physical[r * 2 + 0] = static_cast<double>(static_cast<float>(t));
        m.physical[r * 2 + 1] = (static_cast<double>(r % 100) - 50.0) / 5.0;
    }
    write_rows_file(path, m, layout);
}

} // namespace

fs::path make_fig1_dataset(const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path metadata = dir / "recording_metadata.json";
    write_text(metadata, fig1_metadata());

    // time file: 4833 float32 difference values in seconds summing to the
    // recording span of 3467.435 s
    {
        BinaryLayout layout;
        layout.data_type = DataType::Float;
        layout.bits = 32;
        layout.endianness = Endianness::Little;
        layout.n_channels = 1;
        layout.rows = 4833;
        SampleMatrix m = SampleMatrix::zeros(4833, 1);
        const double delta = 3467.435 / 4832.0;
        m.physical[0] = 0.0;
        for (std::size_t r = 1; r < 4833; ++r)
            m.physical[r] = static_cast<double>(static_cast<float>(delta));
        write_rows_file(dir / "sensor_time.bin", m, layout);
    }

    {
        BinaryLayout layout;
        layout.data_type = DataType::Int;
        layout.bits = 16;
        layout.endianness = Endianness::Little;
        layout.n_channels = 3;
        layout.rows = 4833;
        SampleMatrix m = SampleMatrix::zeros(4833, 3);
        for (std::size_t i = 0; i < m.physical.size(); ++i)
            m.physical[i] = static_cast<double>(static_cast<std::int64_t>(i * 7 % 1201) - 600);
        write_rows_file(dir / "sensor_samples.bin", m, layout);
    }
    return metadata;
}

fs::path make_audio_dataset(const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path metadata = dir / "audio_metadata.json";
    write_text(metadata, audio_metadata());

    BinaryLayout layout;
    layout.data_type = DataType::Int;
    layout.bits = 16;
    layout.endianness = Endianness::Little;
    layout.n_channels = 2;
    layout.rows = 1323000;
    SampleMatrix m = SampleMatrix::zeros(layout.rows, 2);
    for (std::size_t i = 0; i < m.physical.size(); ++i)
        m.physical[i] = static_cast<double>(static_cast<std::int64_t>(i * 31 % 2001) - 1000);
    write_rows_file(dir / "audio_voice_089.raw", m, layout);
    return metadata;
}

fs::path make_hierarchical_dataset(const fs::path& dir) {
    fs::create_directories(dir);
    const fs::path metadata = dir / "sessions_metadata.json";
    write_text(metadata, hierarchical_metadata());

    // session 1 spans 607.143 s, session 2 spans 11544.113 s
    write_self_timed(dir / "accelerometer_t1.bin", 60714, 607143.0); // ms
    write_self_timed(dir / "temperature_t1.bin", 607, 607.143);      // s
    write_self_timed(dir / "accelerometer_t2.bin", 1154411, 11544113.0);
    write_self_timed(dir / "temperature_t2.bin", 11544, 11544.113);
    return metadata;
}

fs::path temp_dir(const std::string& name) {
    static std::atomic<unsigned> counter{0};
    const fs::path dir = fs::temp_directory_path() / "tsdf_tests" /
                         (name + "_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace fixtures
