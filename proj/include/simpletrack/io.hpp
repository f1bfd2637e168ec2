#pragma once

#include <string>
#include <vector>

#include "simpletrack/metrics.hpp"
#include "simpletrack/tracker.hpp"
#include "simpletrack/types.hpp"

namespace simpletrack::io {

inline constexpr int kFormatVersion = 1;

// All three streams are JSON-lines files. The first line is the header
// {"format_version":1}; every following line is one record with a fixed field
// order and floats printed to 6 decimal places.
//
// detection: {"sequence_id":s,"frame_index":i,"timestamp":t,"class":c,
//             "score":x,"box":[cx,cy,cz,l,w,h,yaw],"velocity":[vx,vy],
//             "is_evaluation_frame":b}   (velocity optional)
// A line without class/score/box is a frame marker: it declares the frame
// (so empty frames survive the round trip) and contributes no detection.
// track:     {"sequence_id":s,"frame_index":i,"track_id":k,"class":c,
//             "score":x,"box":[...],"source":"det"|"pred"}
// gt:        {"sequence_id":s,"frame_index":i,"gt_id":k,"class":c,"box":[...]}

/// Load detections grouped by (sequence, frame), frames sorted by
/// (sequence_id, frame_index). Throws IoError, ParseError (with line number),
/// or SchemaError (naming the field).
std::vector<Frame> load_detections(const std::string& path);

/// Write frames (with markers for empty ones). Throws IoError.
void write_detections(const std::vector<Frame>& frames,
                      const std::string& path);

tracker::TrackStream load_tracks(const std::string& path);
void write_tracks(const tracker::TrackStream& stream, const std::string& path);

std::vector<metrics::GtRecord> load_gt(const std::string& path);
void write_gt(const std::vector<metrics::GtRecord>& records,
              const std::string& path);

/// Write any text document (reports, configs). Throws IoError.
void write_text(const std::string& text, const std::string& path);

/// Read a whole text file. Throws IoError.
std::string read_text(const std::string& path);

}  // namespace simpletrack::io
