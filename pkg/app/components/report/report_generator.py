import logging
import os
from xml.sax.saxutils import escape

from reportlab.lib import colors
from reportlab.lib.pagesizes import A4
from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
from reportlab.lib.units import cm
from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle

from app.components.report.report_writer import SECTION_TITLES, _format_value

logger = logging.getLogger(__name__)


class ReportGenerator:
    def __init__(self, output_dir):
        """
        Initialize the report generator.

        Args:
            output_dir: Directory where report.pdf is written
        """
        self.output_dir = output_dir
        os.makedirs(output_dir, exist_ok=True)
        self.styles = self._create_styles()

    def _create_styles(self):
        """Create and return a stylesheet for the PDF."""
        styles = getSampleStyleSheet()

        styles.add(ParagraphStyle(
            name='ReportTitle',
            parent=styles['Heading1'],
            fontSize=16,
            textColor=colors.darkblue,
            spaceAfter=8,
        ))

        styles.add(ParagraphStyle(
            name='Verdict',
            parent=styles['Normal'],
            fontName='Helvetica-Bold',
            fontSize=11,
            spaceBefore=4,
            spaceAfter=8,
        ))

        styles.add(ParagraphStyle(
            name='Small',
            parent=styles['Normal'],
            fontSize=8,
            leading=10,
        ))

        return styles

    def generate_report_pdf(self, report, filename="report.pdf"):
        """
        Render a ConjectureReport as a PDF.

        Returns:
            str: Path to the generated file
        """
        pdf_path = os.path.join(self.output_dir, filename)
        doc = SimpleDocTemplate(
            pdf_path,
            pagesize=A4,
            leftMargin=1.5*cm,
            rightMargin=1.5*cm,
            topMargin=1.5*cm,
            bottomMargin=1.5*cm,
            title=f"Limit-cycle report: {report.system_label}",
            invariant=1,
        )

        elements = []
        elements.extend(self._create_header(report))
        for key, evidence in report.evidence.items():
            elements.extend(self._create_evidence_table(SECTION_TITLES.get(key, key), evidence))
        elements.extend(self._create_roots_table(report))
        elements.extend(self._create_notes("Failures", report.failures))
        elements.extend(self._create_notes("Caveats", report.caveats))

        doc.build(elements)
        logger.info("Wrote %s", pdf_path)
        return pdf_path

    def _create_header(self, report):
        eps = ", ".join(f"{e:g}" for e in report.epsilons) or "none"
        return [
            Paragraph(f"Limit-cycle evidence for {report.system_label}", self.styles['ReportTitle']),
            Paragraph(
                f"Kind: {report.kind}. Annulus r in [{report.r_range[0]:g}, {report.r_range[1]:g}]. eps: {eps}.",
                self.styles['Normal'],
            ),
            Paragraph(f"Verdict: {escape(report.verdict)}", self.styles['Verdict']),
        ]

    def _table(self, rows, widths):
        table = Table(rows, colWidths=widths)
        table.setStyle(TableStyle([
            ('BACKGROUND', (0, 0), (-1, 0), colors.lightgrey),
            ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
            ('FONTSIZE', (0, 0), (-1, -1), 8),
            ('GRID', (0, 0), (-1, -1), 0.25, colors.grey),
            ('VALIGN', (0, 0), (-1, -1), 'TOP'),
        ]))
        return table

    def _create_evidence_table(self, title, evidence):
        rows = [["Quantity", "Value"]]
        rows.extend([name, Paragraph(escape(_format_value(value)), self.styles['Small'])] for name, value in evidence.items())
        return [
            Paragraph(title, self.styles['Heading3']),
            self._table(rows, [6*cm, 12*cm]),
            Spacer(1, 0.3*cm),
        ]

    def _create_roots_table(self, report):
        if not report.root_reports:
            return []
        rows = [["Function", "Root", "Bracket", "Kind", "Derivative"]]
        for roots in report.root_reports:
            if not roots.roots:
                rows.append([roots.function_label, "none", "", "", ""])
            for root in roots.roots:
                rows.append([
                    roots.function_label,
                    f"{root.location:.9g}",
                    f"[{root.bracket[0]:.6g}, {root.bracket[1]:.6g}]",
                    root.multiplicity,
                    "" if root.derivative is None else f"{root.derivative:.6g}",
                ])
        return [
            Paragraph("Root searches", self.styles['Heading3']),
            self._table(rows, [3.5*cm, 3.5*cm, 4.5*cm, 3*cm, 3.5*cm]),
            Spacer(1, 0.3*cm),
        ]

    def _create_notes(self, title, notes):
        if not notes:
            return []
        elements = [Paragraph(title, self.styles['Heading3'])]
        elements.extend(Paragraph(f"- {escape(note)}", self.styles['Small']) for note in notes)
        elements.append(Spacer(1, 0.3*cm))
        return elements
