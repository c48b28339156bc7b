#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dcdc {

/// Marker for a discrete change during a run (comparator switch, load step).
struct EventMarker {
    double t = 0.0;
    std::string kind;
};

/// Uniformly sampled time series of named channels plus event markers.
/// All channels share the sample grid; times are strictly increasing.
class Waveform {
public:
    Waveform() = default;
    explicit Waveform(std::vector<std::string> channel_names);

    const std::vector<std::string>& channels() const { return names_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& channel(const std::string& name) const;
    const std::vector<EventMarker>& events() const { return events_; }

    std::size_t samples() const { return times_.size(); }
    bool has_channel(const std::string& name) const;

    /// Appends one sample row; values must match the channel count and t must
    /// exceed the previous sample time.
    void append(double t, const std::vector<double>& values);
    void add_event(double t, const std::string& kind);

    /// Value of `name` at sample index i.
    double value(const std::string& name, std::size_t i) const;

    /// CSV with header "t,<channels...>".
    void write_csv(std::ostream& out) const;
    /// Sidecar CSV "t,kind".
    void write_events_csv(std::ostream& out) const;

private:
    std::vector<std::string> names_;
    std::vector<double> times_;
    std::vector<std::vector<double>> data_; // one vector per channel
    std::vector<EventMarker> events_;
};

} // namespace dcdc
