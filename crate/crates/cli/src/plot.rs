//! Gnuplot scripts that render the CSV outputs to SVG.

fn header(svg: &str) -> String {
    format!(
        "set terminal svg size 800,520 dynamic\nset output '{svg}'\nset datafile separator ','\nset key autotitle columnhead\nset grid\n"
    )
}

pub fn spectral(fit: Option<(f64, f64, f64)>) -> String {
    let mut s = header("spectral.svg");
    s.push_str("set xlabel 'N'\nset ylabel 'log C_N'\n");
    match fit {
        Some((a, b, eps)) => s.push_str(&format!(
            "fit_curve(x) = {a:.17e} + {b:.17e} * x**{:.17e}\nplot 'spectral.csv' using 1:(log($3)) with linespoints title 'log C_N', fit_curve(x) title 'least-squares fit'\n",
            1.0 - eps / 2.0
        )),
        None => s.push_str("plot 'spectral.csv' using 1:(log($3)) with linespoints title 'log C_N'\n"),
    }
    s
}

pub fn bernstein() -> String {
    header("bernstein.svg")
        + "set xlabel '|alpha|+|beta|'\nset ylabel 'lhs/rhs'\nplot 'bernstein.csv' using ($2+$3):6 with points pt 7 ps 0.4 title 'ratio'\n"
}

pub fn covering(dim: usize) -> String {
    let mut s = header("covering.svg");
    if dim == 1 {
        s.push_str("set xlabel 'x'\nset ylabel 'radius'\nplot 'covering.csv' using 1:2:(0):2 with vectors nohead title 'balls'\n");
    } else {
        s.push_str("set size ratio -1\nplot 'covering.csv' using 1:2:3 with circles title 'balls'\n");
    }
    s
}

pub fn dissipation() -> String {
    header("decay.svg") + "set logscale y\nset xlabel 'level'\nset ylabel '|P_j f(t)|'\nplot for [i=0:*] 'decay.csv' every ::0 using 2:3 index i with linespoints notitle\n"
}

pub fn control() -> String {
    header("control.svg")
        + "set logscale y\nset xlabel 'T'\nplot 'cost.csv' using 1:2 with linespoints title 'C_T', '' using 1:3 with linespoints title 'cost'\n"
}
