#include "gael/plot.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "gael/errors.hpp"

namespace gael {

namespace {

constexpr double kCanvas = 640.0;   // square canvas, px
constexpr double kMarginFrac = 0.05;
constexpr double kCrossArm = 5.0;   // half-length of a center cross, px

// Pixel coordinates at two decimals: plenty for a 640px canvas and, unlike
// shortest-round-trip floats, immune to trailing-digit noise in the markup.
void append_px(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 2);
    out.append(buf, res.ptr);
}

void check_cloud(const Tensor& t, const char* what) {
    if (t.numel() == 0) return;
    if (t.rank() != 2 || t.cols() != 2)
        throw ShapeError(std::string(what) + " must be (n x 2), got " + t.shape_str());
    if (!t.all_finite())
        throw std::invalid_argument(std::string(what) + " contain non-finite coordinates");
}

struct Box {
    double xmin, xmax, ymin, ymax;

    void include(const Tensor& t) {
        for (std::size_t r = 0; r < t.rows(); ++r) {
            xmin = std::min(xmin, t.at(r, 0));
            xmax = std::max(xmax, t.at(r, 0));
            ymin = std::min(ymin, t.at(r, 1));
            ymax = std::max(ymax, t.at(r, 1));
        }
    }
};

}  // namespace

std::string render_scatter_svg(const Tensor& points, const Tensor& centers) {
    check_cloud(points, "points");
    check_cloud(centers, "centers");

    Box box{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    if (points.numel() > 0) box.include(points);
    if (centers.numel() > 0) box.include(centers);
    if (box.xmin > box.xmax) box = {-1.0, 1.0, -1.0, 1.0};  // nothing to plot
    if (box.xmax - box.xmin == 0.0) {
        box.xmin -= 1.0;
        box.xmax += 1.0;
    }
    if (box.ymax - box.ymin == 0.0) {
        box.ymin -= 1.0;
        box.ymax += 1.0;
    }
    double mx = (box.xmax - box.xmin) * kMarginFrac;
    double my = (box.ymax - box.ymin) * kMarginFrac;
    box.xmin -= mx;
    box.xmax += mx;
    box.ymin -= my;
    box.ymax += my;

    auto to_px_x = [&](double x) { return (x - box.xmin) / (box.xmax - box.xmin) * kCanvas; };
    auto to_px_y = [&](double y) { return kCanvas - (y - box.ymin) / (box.ymax - box.ymin) * kCanvas; };

    std::string svg;
    svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"640\" "
           "height=\"640\" viewBox=\"0 0 640 640\">\n";
    svg += "<rect x=\"0\" y=\"0\" width=\"640\" height=\"640\" fill=\"#ffffff\"/>\n";

    // Axes: the zero lines when they fall inside the viewport, plus a frame.
    if (box.xmin <= 0.0 && 0.0 <= box.xmax) {
        svg += "<line x1=\"";
        append_px(svg, to_px_x(0.0));
        svg += "\" y1=\"0\" x2=\"";
        append_px(svg, to_px_x(0.0));
        svg += "\" y2=\"640\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
    }
    if (box.ymin <= 0.0 && 0.0 <= box.ymax) {
        svg += "<line x1=\"0\" y1=\"";
        append_px(svg, to_px_y(0.0));
        svg += "\" x2=\"640\" y2=\"";
        append_px(svg, to_px_y(0.0));
        svg += "\" stroke=\"#cccccc\" stroke-width=\"1\"/>\n";
    }
    svg += "<rect x=\"0.5\" y=\"0.5\" width=\"639\" height=\"639\" fill=\"none\" "
           "stroke=\"#333333\" stroke-width=\"1\"/>\n";

    std::size_t n_points = points.numel() == 0 ? 0 : points.rows();
    std::size_t n_centers = centers.numel() == 0 ? 0 : centers.rows();

    for (std::size_t r = 0; r < n_points; ++r) {
        svg += "<circle cx=\"";
        append_px(svg, to_px_x(points.at(r, 0)));
        svg += "\" cy=\"";
        append_px(svg, to_px_y(points.at(r, 1)));
        svg += "\" r=\"1.5\" fill=\"#1f77b4\" fill-opacity=\"0.6\"/>\n";
    }

    for (std::size_t r = 0; r < n_centers; ++r) {
        double cx = to_px_x(centers.at(r, 0));
        double cy = to_px_y(centers.at(r, 1));
        svg += "<path d=\"M ";
        append_px(svg, cx - kCrossArm);
        svg += ' ';
        append_px(svg, cy);
        svg += " L ";
        append_px(svg, cx + kCrossArm);
        svg += ' ';
        append_px(svg, cy);
        svg += " M ";
        append_px(svg, cx);
        svg += ' ';
        append_px(svg, cy - kCrossArm);
        svg += " L ";
        append_px(svg, cx);
        svg += ' ';
        append_px(svg, cy + kCrossArm);
        svg += "\" stroke=\"#d62728\" stroke-width=\"1.5\" fill=\"none\"/>\n";
    }

    svg += "</svg>\n";
    return svg;
}

void save_scatter_svg(const Tensor& points, const Tensor& centers, const std::string& path) {
    std::string svg = render_scatter_svg(points, centers);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for writing: " + path);
    f.write(svg.data(), static_cast<std::streamsize>(svg.size()));
    if (!f) throw IoError("write failed: " + path);
}

}  // namespace gael
