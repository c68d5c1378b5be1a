#pragma once

// Minimal CSV writer with round-trip double formatting.

#include "ldbp/common.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace ldbp::cli {

class Csv {
public:
    explicit Csv(std::vector<std::string> header) : columns_(header.size())
    {
        for (std::size_t i = 0; i < header.size(); ++i) text_ += (i ? "," : "") + header[i];
        text_ += '\n';
    }

    Csv& row()
    {
        close_row();
        open_ = true;
        return *this;
    }

    Csv& add(double v)
    {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return add(std::string(buf));
    }

    Csv& add(long long v) { return add(std::to_string(v)); }

    Csv& add(const std::string& s)
    {
        if (cells_++ > 0) text_ += ',';
        text_ += s;
        return *this;
    }

    void write(const std::filesystem::path& path)
    {
        close_row();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw ConfigError("cannot write " + path.string());
        out << text_;
    }

    [[nodiscard]] const std::string& text() const { return text_; }

private:
    void close_row()
    {
        if (!open_) return;
        if (cells_ != columns_) throw std::logic_error("csv row has the wrong number of cells");
        text_ += '\n';
        open_ = false;
        cells_ = 0;
    }

    std::size_t columns_;
    std::size_t cells_{0};
    bool open_{false};
    std::string text_;
};

} // namespace ldbp::cli
