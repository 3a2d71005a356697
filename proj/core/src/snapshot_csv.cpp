#include "lwucb/environments.hpp"

#include "lwucb/errors.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <unordered_map>

namespace lwucb {

namespace {

std::vector<std::string_view> split(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos)
            break;
        start = comma + 1;
    }
    return out;
}

bool is_blank(std::string_view s)
{
    return std::all_of(s.begin(), s.end(), [](char c) { return c == ' ' || c == '\t'; });
}

std::optional<double> parse_number(std::string_view s)
{
    double v = 0.0;
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || s.empty())
        return std::nullopt;
    return v;
}

bool is_missing(std::string_view s)
{
    return s.empty() || s == "nan" || s == "NaN" || s == "NAN" || s == "NA";
}

struct PendingSnapshot {
    std::string label;
    std::size_t first_line = 0;
    std::set<std::size_t> present; // includes rows with missing values
    std::map<std::size_t, double> readings;
};

} // namespace

SnapshotDataset parse_snapshot_csv(std::istream& in, int dims, const std::string& default_label)
{
    if (dims != 2 && dims != 3)
        throw std::invalid_argument("parse_snapshot_csv: dims must be 2 or 3");

    std::vector<std::string> expected{"sensor_id", "x", "y"};
    if (dims == 3)
        expected.emplace_back("z");
    expected.emplace_back("value");

    SnapshotDataset ds;
    ds.dims = dims;
    std::vector<std::array<double, 3>> coords;
    std::unordered_map<std::string, std::size_t> sensor_index;
    std::vector<PendingSnapshot> pending;
    std::unordered_map<std::string, std::size_t> snapshot_index;

    bool have_header = false;
    bool with_snapshot = false;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line(raw);
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF"))
            line.remove_prefix(3);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if (is_blank(line))
            continue;

        const auto fields = split(line);
        if (!have_header) {
            std::vector<std::string_view> cols = fields;
            if (!cols.empty() && cols.front() == "snapshot") {
                with_snapshot = true;
                cols.erase(cols.begin());
            }
            if (!std::equal(cols.begin(), cols.end(), expected.begin(), expected.end()))
                throw IngestionError("malformed header '" + std::string(line) + "' for d=" + std::to_string(dims),
                                     line_no);
            have_header = true;
            continue;
        }

        const std::size_t width = expected.size() + (with_snapshot ? 1 : 0);
        if (fields.size() != width)
            throw IngestionError("expected " + std::to_string(width) + " fields, found "
                                     + std::to_string(fields.size()), line_no);
        std::size_t f = 0;
        const std::string label = with_snapshot ? std::string(fields[f++]) : default_label;
        if (label.empty())
            throw IngestionError("empty snapshot label", line_no);
        const std::string id(fields[f++]);
        if (id.empty())
            throw IngestionError("empty sensor_id", line_no);

        std::array<double, 3> xyz{0.0, 0.0, 0.0};
        for (int c = 0; c < dims; ++c, ++f) {
            const auto v = parse_number(fields[f]);
            if (!v || !std::isfinite(*v))
                throw IngestionError("non-numeric coordinate '" + std::string(fields[f]) + "'", line_no);
            xyz[static_cast<std::size_t>(c)] = *v;
        }
        std::optional<double> value;
        if (!is_missing(fields[f])) {
            value = parse_number(fields[f]);
            if (!value)
                throw IngestionError("non-numeric value '" + std::string(fields[f]) + "'", line_no);
            if (std::isnan(*value))
                value.reset();
            else if (!std::isfinite(*value))
                throw IngestionError("non-finite value '" + std::string(fields[f]) + "'", line_no);
        }

        auto [sit, new_sensor] = sensor_index.emplace(id, coords.size());
        if (new_sensor) {
            coords.push_back(xyz);
            ds.sensor_ids.push_back(id);
        } else if (coords[sit->second] != xyz) {
            throw IngestionError("sensor '" + id + "' has inconsistent coordinates across snapshots", line_no);
        }

        auto [pit, new_snap] = snapshot_index.emplace(label, pending.size());
        if (new_snap)
            pending.push_back(PendingSnapshot{label, line_no, {}, {}});
        PendingSnapshot& snap = pending[pit->second];
        if (!snap.present.insert(sit->second).second)
            throw IngestionError("duplicate sensor_id '" + id + "' in snapshot '" + label + "'", line_no);
        if (value)
            snap.readings.emplace(sit->second, *value);
        else
            ++ds.dropped_rows;
    }
    if (!have_header)
        throw IngestionError("missing header", 0);
    if (pending.empty())
        throw IngestionError("no data rows", line_no);

    const std::set<std::size_t>& reference = pending.front().present;
    for (const PendingSnapshot& snap : pending) {
        if (snap.present != reference)
            throw IngestionError("inconsistent sensor ids across snapshots (snapshot '" + snap.label + "')",
                                 snap.first_line);
    }

    ds.contexts.resize(static_cast<Eigen::Index>(coords.size()), dims);
    for (std::size_t s = 0; s < coords.size(); ++s)
        for (int c = 0; c < dims; ++c)
            ds.contexts(static_cast<Eigen::Index>(s), c) = coords[s][static_cast<std::size_t>(c)];

    for (PendingSnapshot& snap : pending) {
        SnapshotDataset::Snapshot out;
        out.label = snap.label;
        out.values.resize(static_cast<Eigen::Index>(snap.readings.size()));
        Eigen::Index r = 0;
        for (const auto& [sensor, v] : snap.readings) {
            out.sensors.push_back(sensor);
            out.values(r++) = v;
        }
        ds.snapshots.push_back(std::move(out));
    }
    return ds;
}

SnapshotDataset load_snapshot_csv(const std::filesystem::path& path, int dims)
{
    std::ifstream in(path);
    if (!in)
        throw IngestionError("cannot open snapshot file " + path.string(), 0);
    return parse_snapshot_csv(in, dims, path.stem().string());
}

} // namespace lwucb
