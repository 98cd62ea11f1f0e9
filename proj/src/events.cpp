#include "sgamma/events.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace sgamma {

namespace {

constexpr char kMagic[4] = {'S', 'G', 'E', 'V'};
constexpr uint32_t kEventFormatVersion = 1;

void put_u16(std::ostream &os, uint16_t v)
{
	const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
	                            static_cast<unsigned char>(v >> 8)};
	os.write(reinterpret_cast<const char *>(b), 2);
}

void put_u32(std::ostream &os, uint32_t v)
{
	unsigned char b[4];
	for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
	os.write(reinterpret_cast<const char *>(b), 4);
}

void put_u64(std::ostream &os, uint64_t v)
{
	unsigned char b[8];
	for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
	os.write(reinterpret_cast<const char *>(b), 8);
}

uint16_t get_u16(std::istream &is)
{
	unsigned char b[2];
	is.read(reinterpret_cast<char *>(b), 2);
	return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

uint32_t get_u32(std::istream &is)
{
	unsigned char b[4];
	is.read(reinterpret_cast<char *>(b), 4);
	uint32_t v = 0;
	for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
	return v;
}

uint64_t get_u64(std::istream &is)
{
	unsigned char b[8];
	is.read(reinterpret_cast<char *>(b), 8);
	uint64_t v = 0;
	for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
	return v;
}

}  // namespace

void EventStream::validate() const
{
	uint32_t prev = 0;
	for (const Event &e : events) {
		if (e.time_us < prev) {
			throw std::invalid_argument("EventStream: times must be non-decreasing");
		}
		if (e.channel >= channels) {
			throw std::invalid_argument("EventStream: channel out of range");
		}
		if (e.time_us > duration_us) {
			throw std::invalid_argument("EventStream: event after end of stream");
		}
		prev = e.time_us;
	}
}

FrameSequence bin_events(const EventStream &stream, int n_frames)
{
	if (n_frames < 1) {
		throw std::invalid_argument("bin_events: n_frames must be >= 1");
	}
	stream.validate();
	FrameSequence out;
	out.frames = Mat(n_frames, static_cast<int>(stream.channels));
	out.dt_ms = static_cast<double>(stream.duration_us) / 1000.0 / n_frames;
	const double width =
	    static_cast<double>(stream.duration_us) / static_cast<double>(n_frames);
	for (const Event &e : stream.events) {
		int bin = width > 0.0 ? static_cast<int>(e.time_us / width) : 0;
		if (bin >= n_frames) bin = n_frames - 1;  // right edge closes the last bin
		out.frames(bin, e.channel) += e.value;
	}
	return out;
}

FrameSequence downsample_channels(const FrameSequence &frames, int factor)
{
	if (factor < 1) {
		throw std::invalid_argument("downsample_channels: factor must be >= 1");
	}
	if (frames.channels() % factor != 0) {
		throw std::invalid_argument(
		    "downsample_channels: channel count not divisible by factor");
	}
	FrameSequence out;
	out.dt_ms = frames.dt_ms;
	out.frames = Mat(frames.steps(), frames.channels() / factor);
	for (int t = 0; t < frames.steps(); ++t) {
		for (int c = 0; c < frames.channels(); ++c) {
			out.frames(t, c / factor) += frames.frames(t, c);
		}
	}
	return out;
}

FrameSequence downsample_spatial(const FrameSequence &frames, int height,
                                 int width, int polarities, int window)
{
	if (height * width * polarities != frames.channels()) {
		throw std::invalid_argument("downsample_spatial: layout mismatch");
	}
	if (window < 1 || height % window != 0 || width % window != 0) {
		throw std::invalid_argument(
		    "downsample_spatial: window must divide height and width");
	}
	const int oh = height / window, ow = width / window;
	FrameSequence out;
	out.dt_ms = frames.dt_ms;
	out.frames = Mat(frames.steps(), oh * ow * polarities);
	for (int t = 0; t < frames.steps(); ++t) {
		for (int y = 0; y < height; ++y) {
			for (int x = 0; x < width; ++x) {
				for (int p = 0; p < polarities; ++p) {
					const int src = (y * width + x) * polarities + p;
					const int dst = ((y / window) * ow + (x / window)) * polarities + p;
					out.frames(t, dst) += frames.frames(t, src);
				}
			}
		}
	}
	return out;
}

void write_event_stream(const EventStream &stream, const std::string &path)
{
	std::ofstream os(path, std::ios::binary);
	if (!os) {
		throw std::runtime_error("write_event_stream: cannot open " + path);
	}
	os.write(kMagic, 4);
	put_u32(os, kEventFormatVersion);
	put_u32(os, stream.channels);
	put_u64(os, stream.duration_us);
	put_u64(os, stream.events.size());
	for (const Event &e : stream.events) {
		put_u32(os, e.time_us);
		put_u16(os, e.channel);
		put_u16(os, e.value);
	}
	if (!os) {
		throw std::runtime_error("write_event_stream: write failed: " + path);
	}
}

EventStream read_event_stream(const std::string &path)
{
	std::ifstream is(path, std::ios::binary);
	if (!is) {
		throw std::runtime_error("read_event_stream: cannot open " + path);
	}
	char magic[4];
	is.read(magic, 4);
	if (!is || std::memcmp(magic, kMagic, 4) != 0) {
		throw std::runtime_error("read_event_stream: bad magic in " + path);
	}
	const uint32_t version = get_u32(is);
	if (version != kEventFormatVersion) {
		throw std::runtime_error("read_event_stream: unsupported version in " +
		                         path);
	}
	EventStream stream;
	stream.channels = get_u32(is);
	stream.duration_us = get_u64(is);
	const uint64_t count = get_u64(is);
	stream.events.resize(count);
	for (uint64_t i = 0; i < count; ++i) {
		stream.events[i].time_us = get_u32(is);
		stream.events[i].channel = get_u16(is);
		stream.events[i].value = get_u16(is);
	}
	if (!is) {
		throw std::runtime_error("read_event_stream: truncated file: " + path);
	}
	stream.validate();
	return stream;
}

void write_event_csv(const EventStream &stream, std::ostream &os)
{
	os << "# sgev " << kEventFormatVersion << " channels=" << stream.channels
	   << " duration_us=" << stream.duration_us << "\n";
	os << "time_us,channel,value\n";
	for (const Event &e : stream.events) {
		os << e.time_us << ',' << e.channel << ',' << e.value << '\n';
	}
}

EventStream read_event_csv(std::istream &is)
{
	EventStream stream;
	std::string line;
	if (!std::getline(is, line) || line.rfind("# sgev", 0) != 0) {
		throw std::runtime_error("read_event_csv: missing header line");
	}
	{
		std::istringstream hs(line);
		std::string hash, name;
		uint32_t version = 0;
		hs >> hash >> name >> version;
		std::string kv;
		while (hs >> kv) {
			const auto eq = kv.find('=');
			if (eq == std::string::npos) continue;
			const std::string key = kv.substr(0, eq);
			const std::string val = kv.substr(eq + 1);
			if (key == "channels") stream.channels = std::stoul(val);
			if (key == "duration_us") stream.duration_us = std::stoull(val);
		}
		if (version != kEventFormatVersion) {
			throw std::runtime_error("read_event_csv: unsupported version");
		}
	}
	if (!std::getline(is, line) || line != "time_us,channel,value") {
		throw std::runtime_error("read_event_csv: missing column header");
	}
	while (std::getline(is, line)) {
		if (line.empty()) continue;
		Event e;
		if (std::sscanf(line.c_str(), "%u,%hu,%hu", &e.time_us, &e.channel,
		                &e.value) != 3) {
			throw std::runtime_error("read_event_csv: malformed row: " + line);
		}
		stream.events.push_back(e);
	}
	stream.validate();
	return stream;
}

EventStream read_event_file(const std::string &path)
{
	if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
		std::ifstream is(path);
		if (!is) {
			throw std::runtime_error("read_event_file: cannot open " + path);
		}
		return read_event_csv(is);
	}
	return read_event_stream(path);
}

std::vector<ManifestEntry> read_manifest(const std::string &path)
{
	std::ifstream is(path);
	if (!is) {
		throw std::runtime_error("read_manifest: cannot open " + path);
	}
	const std::string dir = std::filesystem::path(path).parent_path().string();
	std::vector<ManifestEntry> entries;
	std::string line;
	while (std::getline(is, line)) {
		if (line.empty() || line[0] == '#') continue;
		const auto comma = line.rfind(',');
		if (comma == std::string::npos) {
			throw std::runtime_error("read_manifest: malformed line: " + line);
		}
		ManifestEntry e;
		e.path = line.substr(0, comma);
		e.label = std::stoi(line.substr(comma + 1));
		if (!e.path.empty() && e.path[0] != '/' && !dir.empty()) {
			e.path = dir + "/" + e.path;
		}
		entries.push_back(std::move(e));
	}
	return entries;
}

void write_manifest(const std::vector<ManifestEntry> &entries,
                    const std::string &path)
{
	std::ofstream os(path);
	if (!os) {
		throw std::runtime_error("write_manifest: cannot open " + path);
	}
	for (const ManifestEntry &e : entries) {
		os << e.path << ',' << e.label << '\n';
	}
}

}  // namespace sgamma
