#include "ltv/dataset_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "ltv/textio.hpp"

namespace ltv {

namespace {

constexpr std::string_view kMagic = "ltvlab-dataset";
constexpr std::string_view kVersion = "v1";

[[noreturn]] void fail(const std::string& path, std::size_t line_no, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + what);
}

template <typename T, typename Fn>
std::string join(const std::vector<T>& v, Fn fmt) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt(v[i]);
    }
    return out;
}

std::vector<double> parse_double_list(std::string_view s) {
    std::vector<double> out;
    for (auto tok : text::split(s, ',')) out.push_back(text::parse_double(tok));
    return out;
}

std::vector<int> parse_int_list(std::string_view s) {
    std::vector<int> out;
    for (auto tok : text::split(s, ',')) out.push_back(static_cast<int>(text::parse_int(tok)));
    return out;
}

}  // namespace

void write_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream f(path, std::ios::binary);  // binary: identical bytes on every platform
    if (!f) throw std::runtime_error("cannot open '" + path + "' for writing");

    f << kMagic << ' ' << kVersion << " m=" << dataset.catalog.size()
      << " f=" << dataset.feature_dim
      << " prices=" << join(dataset.catalog.prices, text::fmt_double)
      << " caps=" << join(dataset.catalog.caps, [](int c) { return std::to_string(c); })
      << '\n';

    for (const auto& s : dataset.samples) {
        f << "id=" << s.sample_id << " day=" << s.day_index
          << " dense=" << join(s.dense, text::fmt_double)
          << " cats=" << join(s.categorical, [](int c) { return std::to_string(c); })
          << " tx="
          << join(s.transactions,
                  [](const TransactionRecord& t) {
                      return text::fmt_double(t.amount) + "@" + text::fmt_double(t.offset_hours);
                  })
          << " ltv=" << text::fmt_double(s.ltv_label)
          << " counts=" << join(s.count_labels, [](int c) { return std::to_string(c); }) << '\n';
    }
    if (!f) throw std::runtime_error("write failed for '" + path + "'");
}

Dataset read_dataset(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path + "' for reading");

    Dataset ds;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(f, line)) fail(path, 1, "missing header line");
    ++line_no;
    {
        auto tokens = text::split_ws(line);
        if (tokens.size() < 2 || tokens[0] != kMagic) fail(path, line_no, "not a dataset file");
        if (tokens[1] != kVersion)
            fail(path, line_no,
                 "version mismatch: got '" + std::string(tokens[1]) + "', expected '" +
                     std::string(kVersion) + "'");
        int m = -1;
        for (std::size_t i = 2; i < tokens.size(); ++i) {
            auto [key, value] = text::split_kv(tokens[i]);
            try {
                if (key == "m") m = static_cast<int>(text::parse_int(value));
                else if (key == "f") ds.feature_dim = static_cast<int>(text::parse_int(value));
                else if (key == "prices") ds.catalog.prices = parse_double_list(value);
                else if (key == "caps") ds.catalog.caps = parse_int_list(value);
                else fail(path, line_no, "unknown header field '" + std::string(key) + "'");
            } catch (const std::invalid_argument& e) {
                fail(path, line_no, "field '" + std::string(key) + "': " + e.what());
            }
        }
        if (m != ds.catalog.size()) fail(path, line_no, "field 'm': does not match price list length");
        try {
            ds.catalog.validate();
        } catch (const std::invalid_argument& e) {
            fail(path, line_no, e.what());
        }
    }

    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        Sample s;
        std::string_view current_field;
        try {
            for (auto token : text::split_ws(line)) {
                auto [key, value] = text::split_kv(token);
                current_field = key;
                if (key == "id") {
                    s.sample_id = text::parse_int(value);
                } else if (key == "day") {
                    s.day_index = static_cast<int>(text::parse_int(value));
                    if (s.day_index < 0) throw std::invalid_argument("day must be >= 0");
                } else if (key == "dense") {
                    s.dense = parse_double_list(value);
                } else if (key == "cats") {
                    s.categorical = parse_int_list(value);
                } else if (key == "tx") {
                    for (auto pair : text::split(value, ',')) {
                        const std::size_t at = pair.find('@');
                        if (at == std::string_view::npos)
                            throw std::invalid_argument("expected amount@offset");
                        TransactionRecord tx;
                        tx.sample_id = s.sample_id;
                        tx.amount = text::parse_double(pair.substr(0, at));
                        tx.offset_hours = text::parse_double(pair.substr(at + 1));
                        if (!(tx.amount > 0.0))
                            throw std::invalid_argument("amount must be > 0");
                        if (!(tx.offset_hours >= 0.0))
                            throw std::invalid_argument("offset must be >= 0");
                        s.transactions.push_back(tx);
                    }
                } else if (key == "ltv") {
                    s.ltv_label = text::parse_double(value);
                    if (!(s.ltv_label >= 0.0)) throw std::invalid_argument("ltv must be >= 0");
                } else if (key == "counts") {
                    s.count_labels = parse_int_list(value);
                } else {
                    throw std::invalid_argument("unknown field");
                }
            }
        } catch (const std::invalid_argument& e) {
            fail(path, line_no, "field '" + std::string(current_field) + "': " + e.what());
        }
        if (static_cast<int>(s.dense.size()) != ds.feature_dim)
            fail(path, line_no, "field 'dense': expected " + std::to_string(ds.feature_dim) +
                                    " values, got " + std::to_string(s.dense.size()));
        ds.samples.push_back(std::move(s));
    }
    return ds;
}

TemporalSplit split_temporal(const std::vector<Sample>& samples, int train_days) {
    int max_day = -1;
    for (const auto& s : samples) max_day = std::max(max_day, s.day_index);
    const int n_days = max_day + 1;
    if (train_days <= 0 || train_days >= n_days)
        throw std::invalid_argument("split_temporal: train_days must be in (0, " +
                                    std::to_string(n_days) + ")");

    TemporalSplit split;
    split.rolling.resize(static_cast<std::size_t>(n_days - train_days));
    for (const auto& s : samples) {
        if (s.day_index < train_days) split.train.push_back(s);
        else split.rolling[static_cast<std::size_t>(s.day_index - train_days)].push_back(s);
    }
    return split;
}

}  // namespace ltv
