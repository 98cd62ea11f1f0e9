#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sgamma/common.hpp"

namespace sgamma {

struct Event {
	uint32_t time_us = 0;
	uint16_t channel = 0;
	uint16_t value = 1;
};

/// Raw event recording: times non-decreasing, channels < channel count.
struct EventStream {
	std::vector<Event> events;
	uint64_t duration_us = 0;
	uint32_t channels = 0;

	void validate() const;
};

/// Time-binned event counts, one row per frame, one column per channel.
struct FrameSequence {
	Mat frames;  // T x channels
	double dt_ms = 1.0;

	int steps() const { return frames.rows; }
	int channels() const { return frames.cols; }
};

/// Accumulates events into n_frames equal-width bins over [0, duration].
/// Events at exactly the right edge land in the last bin. An empty stream
/// yields all-zero frames.
FrameSequence bin_events(const EventStream &stream, int n_frames);

/// Sums adjacent groups of `factor` channels; channel count must divide.
FrameSequence downsample_channels(const FrameSequence &frames, int factor);

/// Spatial variant for camera-style streams laid out as
/// channel = (y * width + x) * polarities + p. Sums window x window blocks
/// per polarity; height and width must divide by window.
FrameSequence downsample_spatial(const FrameSequence &frames, int height,
                                 int width, int polarities, int window);

// --- on-disk formats (little-endian binary with magic header, or CSV) ---

void write_event_stream(const EventStream &stream, const std::string &path);
EventStream read_event_stream(const std::string &path);

void write_event_csv(const EventStream &stream, std::ostream &os);
EventStream read_event_csv(std::istream &is);

/// Decides by extension: ".csv" goes through the CSV reader, anything else
/// through the binary reader.
EventStream read_event_file(const std::string &path);

struct ManifestEntry {
	std::string path;
	int label = 0;
};

/// Sample manifest: one "path,label" line per sample, paths relative to the
/// manifest's directory.
std::vector<ManifestEntry> read_manifest(const std::string &path);
void write_manifest(const std::vector<ManifestEntry> &entries,
                    const std::string &path);

}  // namespace sgamma
