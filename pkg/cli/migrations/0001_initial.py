# Generated by Django 5.2.8 on 2026-10-19 09:12

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('subcommand', models.CharField(max_length=32)),
                ('seed', models.BigIntegerField(blank=True, null=True)),
                ('config_json', models.JSONField(default=dict)),
                ('report_json', models.JSONField(blank=True, null=True)),
                ('manifest_json', models.JSONField(default=list)),
                ('status', models.CharField(choices=[('ok', 'Succeeded'), ('failed', 'Failed')], default='ok', max_length=10)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
            ],
            options={
                'ordering': ['-created_at', '-id'],
            },
        ),
    ]
