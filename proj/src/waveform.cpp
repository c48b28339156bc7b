#include "dcdc/waveform.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace dcdc {

Waveform::Waveform(std::vector<std::string> channel_names)
    : names_(std::move(channel_names)), data_(names_.size()) {}

bool Waveform::has_channel(const std::string& name) const {
    return std::find(names_.begin(), names_.end(), name) != names_.end();
}

const std::vector<double>& Waveform::channel(const std::string& name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return data_[i];
    throw std::out_of_range("no such channel: " + name);
}

void Waveform::append(double t, const std::vector<double>& values) {
    if (values.size() != names_.size())
        throw std::invalid_argument("sample width does not match channel count");
    if (!times_.empty() && t <= times_.back())
        throw std::invalid_argument("sample times must be strictly increasing");
    times_.push_back(t);
    for (std::size_t i = 0; i < values.size(); ++i) data_[i].push_back(values[i]);
}

void Waveform::add_event(double t, const std::string& kind) {
    events_.push_back({t, kind});
}

double Waveform::value(const std::string& name, std::size_t i) const {
    return channel(name).at(i);
}

namespace {
void print_num(std::ostream& out, double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
}
} // namespace

void Waveform::write_csv(std::ostream& out) const {
    out << "t";
    for (const auto& n : names_) out << "," << n;
    out << "\n";
    for (std::size_t s = 0; s < times_.size(); ++s) {
        print_num(out, times_[s]);
        for (const auto& col : data_) {
            out << ",";
            print_num(out, col[s]);
        }
        out << "\n";
    }
}

void Waveform::write_events_csv(std::ostream& out) const {
    out << "t,kind\n";
    for (const auto& ev : events_) {
        print_num(out, ev.t);
        out << "," << ev.kind << "\n";
    }
}

} // namespace dcdc
